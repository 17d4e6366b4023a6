#pragma once

#include <cstddef>
#include <filesystem>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "prmkit/types.hpp"

// Human review of LLM step labels. A reviewer sees the question, the gold
// answer, the step, the judge's rationale and its score, and accepts the
// label only when both rationale and score are reasonable. Verdicts live in
// an append-only JSONL journal; the latest entry per (trace, step, reviewer)
// wins.
namespace prmkit {

enum class Verdict { Pending, Accepted, Rejected };

std::string_view to_string(Verdict v);
std::optional<Verdict> parse_verdict(std::string_view name);

struct ReviewRecord {
  std::string trace_id;
  int step_index = 0;
  std::string annotator;
  int llm_label = 0;
  std::string llm_rationale;
  Verdict verdict = Verdict::Pending;
  std::string reviewer_id;
  std::string timestamp;

  bool operator==(const ReviewRecord&) const = default;
};

std::string encode_review_record(const ReviewRecord& record);
ReviewRecord decode_review_record(std::string_view line, std::size_t line_number = 1);

/// Replays a journal file; a missing file is an empty journal.
std::vector<ReviewRecord> read_journal(const std::filesystem::path& path);

/// Latest verdict per (trace, step, reviewer), in first-seen order.
std::vector<ReviewRecord> latest_verdicts(std::span<const ReviewRecord> journal);

struct ReviewerAccuracy {
  std::string reviewer;
  long long accepted = 0;
  long long rejected = 0;
  std::optional<double> accuracy;  // nullopt: no reviewed steps
};

struct AccuracyReport {
  std::string annotator;
  std::vector<ReviewerAccuracy> per_reviewer;
  /// Majority vote per step across reviewers; ties count as rejected.
  ReviewerAccuracy aggregate;
};

AccuracyReport accuracy_report(std::span<const ReviewRecord> journal, std::string_view annotator);

/// accepted / (accepted + rejected) under the majority-vote aggregate;
/// nullopt when no step by that annotator has been reviewed.
std::optional<double> annotation_accuracy(std::span<const ReviewRecord> journal,
                                          std::string_view annotator);

/// Single-writer append-only journal file.
class ReviewJournal {
 public:
  explicit ReviewJournal(std::filesystem::path path);
  /// Appends one line. On failure the file is restored to its previous size
  /// and ValidationError is thrown.
  void append(const ReviewRecord& record);
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
  std::mutex mutex_;
};

struct ReviewTask {
  std::string id;  // "<record>.<step>"
  std::string trace_id;
  std::size_t record = 0;
  int step_index = 0;
  std::string question;
  std::string gold_answer;
  std::string step_text;
  std::string rationale;
  int llm_score = 0;
  std::string annotator;
};

struct ApiRequest {
  std::string method;
  std::string path;
  std::map<std::string, std::string> query;
  std::string body;
};

struct ApiResponse {
  int status = 200;
  std::string body;  // JSON
};

/// Review API independent of the HTTP transport:
///   GET  /tasks?page=&page_size=&reviewer=   pending tasks
///   GET  /tasks/{id}                         one task with its context
///   POST /tasks/{id}/verdict                 {"verdict": "accepted"|"rejected", "reviewer": "..."}
///   GET  /progress
///   GET  /accuracy[?annotator=]
/// Construction replays the journal, so a restart reproduces the state.
class ReviewService {
 public:
  using Clock = std::function<std::string()>;

  ReviewService(std::vector<DatasetRecord> dataset, std::filesystem::path journal_path,
                Clock clock = {});

  ApiResponse handle(const ApiRequest& request);

  const std::vector<ReviewTask>& tasks() const { return tasks_; }
  std::vector<ReviewRecord> journal_snapshot() const;

 private:
  ApiResponse list_tasks(const ApiRequest& request) const;
  ApiResponse get_task(const std::string& id) const;
  ApiResponse post_verdict(const std::string& id, const std::string& body);
  ApiResponse progress() const;
  ApiResponse accuracy(const ApiRequest& request) const;
  std::optional<std::size_t> find_task(const std::string& id) const;

  std::vector<DatasetRecord> dataset_;
  std::vector<ReviewTask> tasks_;
  std::map<std::string, std::size_t> task_index_;
  ReviewJournal journal_;
  Clock clock_;
  mutable std::shared_mutex state_mutex_;
  std::vector<ReviewRecord> records_;  // full journal, replay order
  // (task, reviewer) -> verdict; the latest-wins view of records_.
  std::map<std::pair<std::size_t, std::string>, Verdict> latest_;
};

}  // namespace prmkit
