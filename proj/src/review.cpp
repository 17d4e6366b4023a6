#include "prmkit/review.hpp"

#include <chrono>
#include <ctime>
#include <fstream>
#include <json.hpp>
#include <set>

#include "prmkit/dataset.hpp"
#include "prmkit/error.hpp"
#include "prmkit/text.hpp"

namespace prmkit {

using Json = nlohmann::ordered_json;

namespace {

std::string utc_now() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

ApiResponse json_response(int status, const Json& body) { return ApiResponse{status, body.dump()}; }

ApiResponse error_response(int status, const std::string& message) {
  Json j;
  j["error"] = message;
  return json_response(status, j);
}

Json reviewer_json(const ReviewerAccuracy& r) {
  Json j;
  j["reviewer"] = r.reviewer;
  j["accepted"] = r.accepted;
  j["rejected"] = r.rejected;
  j["accuracy"] = r.accuracy ? Json(*r.accuracy) : Json(nullptr);
  return j;
}

Json report_json(const AccuracyReport& report) {
  Json j;
  j["annotator"] = report.annotator;
  if (report.aggregate.accuracy) {
    j["accuracy"] = *report.aggregate.accuracy;
    j["status"] = "ok";
  } else {
    j["accuracy"] = nullptr;
    j["status"] = "no data";
  }
  j["accepted"] = report.aggregate.accepted;
  j["rejected"] = report.aggregate.rejected;
  Json rows = Json::array();
  for (const auto& r : report.per_reviewer) rows.push_back(reviewer_json(r));
  j["per_reviewer"] = rows;
  return j;
}

int parse_positive(const std::map<std::string, std::string>& query, const char* key, int fallback) {
  auto it = query.find(key);
  if (it == query.end() || it->second.empty()) return fallback;
  try {
    std::size_t used = 0;
    const int v = std::stoi(it->second, &used);
    if (used != it->second.size() || v < 1) throw std::invalid_argument(key);
    return v;
  } catch (const std::exception&) {
    throw ValidationError(std::string("query parameter '") + key + "' must be a positive integer");
  }
}

}  // namespace

std::string_view to_string(Verdict v) {
  switch (v) {
    case Verdict::Pending: return "pending";
    case Verdict::Accepted: return "accepted";
    case Verdict::Rejected: return "rejected";
  }
  return "pending";
}

std::optional<Verdict> parse_verdict(std::string_view name) {
  const std::string n = to_lower(trim_view(name));
  for (auto v : {Verdict::Pending, Verdict::Accepted, Verdict::Rejected}) {
    if (to_string(v) == n) return v;
  }
  return std::nullopt;
}

std::string encode_review_record(const ReviewRecord& r) {
  Json j;
  j["trace_id"] = r.trace_id;
  j["step_index"] = r.step_index;
  j["annotator"] = r.annotator;
  j["llm_label"] = r.llm_label;
  j["llm_rationale"] = r.llm_rationale;
  j["verdict"] = std::string(to_string(r.verdict));
  j["reviewer_id"] = r.reviewer_id;
  j["timestamp"] = r.timestamp;
  return j.dump();
}

ReviewRecord decode_review_record(std::string_view line, std::size_t line_number) {
  Json j;
  try {
    j = Json::parse(line);
  } catch (const nlohmann::json::exception& e) {
    throw DatasetError(line_number, "<json>", e.what());
  }
  const auto str = [&](const char* key) {
    if (!j.contains(key) || !j.at(key).is_string()) throw DatasetError(line_number, key, "expected a string");
    return j.at(key).get<std::string>();
  };
  const auto integer = [&](const char* key) {
    if (!j.contains(key) || !j.at(key).is_number_integer()) throw DatasetError(line_number, key, "expected an integer");
    return j.at(key).get<int>();
  };
  ReviewRecord r;
  r.trace_id = str("trace_id");
  r.step_index = integer("step_index");
  r.annotator = str("annotator");
  r.llm_label = integer("llm_label");
  r.llm_rationale = str("llm_rationale");
  const auto v = parse_verdict(str("verdict"));
  if (!v) throw DatasetError(line_number, "verdict", "unknown verdict");
  r.verdict = *v;
  r.reviewer_id = str("reviewer_id");
  r.timestamp = str("timestamp");
  return r;
}

std::vector<ReviewRecord> read_journal(const std::filesystem::path& path) {
  std::vector<ReviewRecord> out;
  if (!std::filesystem::exists(path)) return out;
  for (const auto& [n, line] : read_jsonl_lines(path)) out.push_back(decode_review_record(line, n));
  return out;
}

std::vector<ReviewRecord> latest_verdicts(std::span<const ReviewRecord> journal) {
  std::vector<ReviewRecord> out;
  std::map<std::tuple<std::string, int, std::string>, std::size_t> slot;
  for (const auto& r : journal) {
    const auto key = std::make_tuple(r.trace_id, r.step_index, r.reviewer_id);
    auto it = slot.find(key);
    if (it == slot.end()) {
      slot.emplace(key, out.size());
      out.push_back(r);
    } else {
      out[it->second] = r;
    }
  }
  return out;
}

AccuracyReport accuracy_report(std::span<const ReviewRecord> journal, std::string_view annotator) {
  AccuracyReport report;
  report.annotator = std::string(annotator);
  report.aggregate.reviewer = "majority";
  std::map<std::string, std::size_t> row_of;
  std::map<std::pair<std::string, int>, std::pair<int, int>> votes;  // (trace, step) -> (accepts, rejects)
  std::vector<std::pair<std::string, int>> step_order;
  for (const auto& r : latest_verdicts(journal)) {
    if (!annotator.empty() && r.annotator != annotator) continue;
    if (r.verdict == Verdict::Pending) continue;
    auto it = row_of.find(r.reviewer_id);
    if (it == row_of.end()) {
      it = row_of.emplace(r.reviewer_id, report.per_reviewer.size()).first;
      ReviewerAccuracy row;
      row.reviewer = r.reviewer_id;
      report.per_reviewer.push_back(std::move(row));
    }
    auto& row = report.per_reviewer[it->second];
    const bool accepted = r.verdict == Verdict::Accepted;
    (accepted ? row.accepted : row.rejected)++;
    const auto step = std::make_pair(r.trace_id, r.step_index);
    if (!votes.count(step)) step_order.push_back(step);
    auto& v = votes[step];
    (accepted ? v.first : v.second)++;
  }
  for (auto& row : report.per_reviewer) {
    row.accuracy = static_cast<double>(row.accepted) / static_cast<double>(row.accepted + row.rejected);
  }
  for (const auto& step : step_order) {
    const auto [acc, rej] = votes[step];
    (acc > rej ? report.aggregate.accepted : report.aggregate.rejected)++;
  }
  const long long total = report.aggregate.accepted + report.aggregate.rejected;
  if (total > 0) report.aggregate.accuracy = static_cast<double>(report.aggregate.accepted) / static_cast<double>(total);
  return report;
}

std::optional<double> annotation_accuracy(std::span<const ReviewRecord> journal, std::string_view annotator) {
  return accuracy_report(journal, annotator).aggregate.accuracy;
}

ReviewJournal::ReviewJournal(std::filesystem::path path) : path_(std::move(path)) {}

void ReviewJournal::append(const ReviewRecord& record) {
  std::lock_guard lock(mutex_);
  std::error_code ec;
  const bool existed = std::filesystem::exists(path_, ec);
  const auto before = existed ? std::filesystem::file_size(path_, ec) : 0;
  const std::string line = encode_review_record(record) + "\n";
  bool ok = false;
  {
    std::ofstream out(path_, std::ios::binary | std::ios::app);
    if (out) {
      out.write(line.data(), static_cast<std::streamsize>(line.size()));
      out.flush();
      ok = static_cast<bool>(out);
    }
  }
  if (ok) return;
  if (existed) {
    std::filesystem::resize_file(path_, before, ec);
  } else if (std::filesystem::is_regular_file(path_, ec)) {
    std::filesystem::remove(path_, ec);
  }
  throw ValidationError("cannot append to review journal " + path_.string());
}

ReviewService::ReviewService(std::vector<DatasetRecord> dataset, std::filesystem::path journal_path, Clock clock)
    : dataset_(std::move(dataset)), journal_(std::move(journal_path)), clock_(clock ? std::move(clock) : Clock(utc_now)) {
  std::map<std::string, int> id_count;
  for (const auto& r : dataset_) ++id_count[r.problem.id];
  std::map<std::string, int> seen;
  for (std::size_t r = 0; r < dataset_.size(); ++r) {
    const auto& rec = dataset_[r];
    std::string trace_id = rec.problem.id;
    if (id_count[trace_id] > 1) trace_id += "#" + std::to_string(seen[rec.problem.id]++);
    const auto& anns = rec.annotated.annotations();
    for (std::size_t s = 0; s < anns.size(); ++s) {
      ReviewTask t;
      t.id = std::to_string(r) + "." + std::to_string(s);
      t.trace_id = trace_id;
      t.record = r;
      t.step_index = static_cast<int>(s);
      t.question = rec.problem.statement;
      t.gold_answer = rec.problem.gold_answer;
      t.step_text = rec.annotated.trace().steps[s].text;
      t.rationale = anns[s].rationale;
      t.llm_score = anns[s].label;
      t.annotator = anns[s].annotator_tag;
      task_index_[t.id] = tasks_.size();
      tasks_.push_back(std::move(t));
    }
  }
  std::map<std::pair<std::string, int>, std::size_t> by_step;
  for (std::size_t i = 0; i < tasks_.size(); ++i) by_step[{tasks_[i].trace_id, tasks_[i].step_index}] = i;
  records_ = read_journal(journal_.path());
  for (const auto& rec : records_) {
    auto it = by_step.find({rec.trace_id, rec.step_index});
    if (it == by_step.end()) continue;
    latest_[{it->second, rec.reviewer_id}] = rec.verdict;
  }
}

std::vector<ReviewRecord> ReviewService::journal_snapshot() const {
  std::shared_lock lock(state_mutex_);
  return records_;
}

std::optional<std::size_t> ReviewService::find_task(const std::string& id) const {
  auto it = task_index_.find(id);
  if (it == task_index_.end()) return std::nullopt;
  return it->second;
}

ApiResponse ReviewService::handle(const ApiRequest& request) {
  try {
    const std::string& p = request.path;
    const bool get = request.method == "GET";
    const bool post = request.method == "POST";
    if (p == "/tasks") return get ? list_tasks(request) : error_response(405, "method not allowed");
    if (p == "/progress") return get ? progress() : error_response(405, "method not allowed");
    if (p == "/accuracy") return get ? accuracy(request) : error_response(405, "method not allowed");
    constexpr std::string_view prefix = "/tasks/";
    constexpr std::string_view suffix = "/verdict";
    if (p.rfind(prefix, 0) == 0) {
      std::string rest = p.substr(prefix.size());
      if (rest.size() > suffix.size() && rest.compare(rest.size() - suffix.size(), suffix.size(), suffix) == 0) {
        rest.resize(rest.size() - suffix.size());
        return post ? post_verdict(rest, request.body) : error_response(405, "method not allowed");
      }
      if (!rest.empty() && rest.find('/') == std::string::npos) {
        return get ? get_task(rest) : error_response(405, "method not allowed");
      }
    }
    return error_response(404, "no route for " + request.method + " " + p);
  } catch (const ValidationError& e) {
    return error_response(400, e.what());
  }
}

ApiResponse ReviewService::list_tasks(const ApiRequest& request) const {
  const int page = parse_positive(request.query, "page", 1);
  const int page_size = std::min(parse_positive(request.query, "page_size", 50), 1000);
  auto rit = request.query.find("reviewer");
  const std::string reviewer = rit == request.query.end() ? "" : rit->second;
  std::shared_lock lock(state_mutex_);
  std::vector<std::size_t> pending;
  for (std::size_t i = 0; i < tasks_.size(); ++i) {
    bool done = false;
    if (reviewer.empty()) {
      auto it = latest_.lower_bound({i, std::string()});
      done = it != latest_.end() && it->first.first == i;
    } else {
      done = latest_.count({i, reviewer}) > 0;
    }
    if (!done) pending.push_back(i);
  }
  Json items = Json::array();
  const std::size_t begin = static_cast<std::size_t>(page - 1) * static_cast<std::size_t>(page_size);
  for (std::size_t k = begin; k < pending.size() && k < begin + static_cast<std::size_t>(page_size); ++k) {
    const auto& t = tasks_[pending[k]];
    Json j;
    j["id"] = t.id;
    j["trace_id"] = t.trace_id;
    j["step_index"] = t.step_index;
    j["question"] = t.question;
    j["gold_answer"] = t.gold_answer;
    j["step"] = t.step_text;
    j["rationale"] = t.rationale;
    j["llm_score"] = t.llm_score;
    j["annotator"] = t.annotator;
    items.push_back(std::move(j));
  }
  Json out;
  out["tasks"] = items;
  out["page"] = page;
  out["page_size"] = page_size;
  out["total_pending"] = pending.size();
  return json_response(200, out);
}

ApiResponse ReviewService::get_task(const std::string& id) const {
  const auto idx = find_task(id);
  if (!idx) return error_response(404, "unknown task " + id);
  std::shared_lock lock(state_mutex_);
  const auto verdicts_of = [&](std::size_t task) {
    Json v = Json::object();
    for (auto it = latest_.lower_bound({task, std::string()}); it != latest_.end() && it->first.first == task; ++it) {
      v[it->first.second] = std::string(to_string(it->second));
    }
    return v;
  };
  const auto& t = tasks_[*idx];
  Json j;
  j["id"] = t.id;
  j["trace_id"] = t.trace_id;
  j["step_index"] = t.step_index;
  j["question"] = t.question;
  j["gold_answer"] = t.gold_answer;
  j["step"] = t.step_text;
  j["rationale"] = t.rationale;
  j["llm_score"] = t.llm_score;
  j["annotator"] = t.annotator;
  j["verdicts"] = verdicts_of(*idx);
  Json context = Json::array();
  for (int s = 0; s < t.step_index; ++s) {
    const std::size_t prior = *idx - static_cast<std::size_t>(t.step_index - s);
    Json c;
    c["id"] = tasks_[prior].id;
    c["step_index"] = s;
    c["step"] = tasks_[prior].step_text;
    c["llm_score"] = tasks_[prior].llm_score;
    c["verdicts"] = verdicts_of(prior);
    context.push_back(std::move(c));
  }
  j["context"] = context;
  return json_response(200, j);
}

ApiResponse ReviewService::post_verdict(const std::string& id, const std::string& body) {
  const auto idx = find_task(id);
  if (!idx) return error_response(404, "unknown task " + id);
  const Json j = Json::parse(body, nullptr, false);
  if (j.is_discarded() || !j.is_object()) return error_response(400, "body must be a JSON object");
  if (!j.contains("verdict") || !j.at("verdict").is_string()) return error_response(400, "missing string field 'verdict'");
  if (!j.contains("reviewer") || !j.at("reviewer").is_string() || trim_view(j.at("reviewer").get<std::string>()).empty()) {
    return error_response(400, "missing nonempty string field 'reviewer'");
  }
  const auto verdict = parse_verdict(j.at("verdict").get<std::string>());
  if (!verdict || *verdict == Verdict::Pending) return error_response(400, "verdict must be 'accepted' or 'rejected'");
  const auto& t = tasks_[*idx];
  ReviewRecord rec{t.trace_id, t.step_index, t.annotator, t.llm_score, t.rationale, *verdict,
                   trim(j.at("reviewer").get<std::string>()), clock_()};
  std::unique_lock lock(state_mutex_);
  try {
    journal_.append(rec);
  } catch (const ValidationError& e) {
    return error_response(500, e.what());
  }
  records_.push_back(rec);
  latest_[{*idx, rec.reviewer_id}] = rec.verdict;
  Json out;
  out["id"] = t.id;
  out["verdict"] = std::string(to_string(rec.verdict));
  out["reviewer"] = rec.reviewer_id;
  out["timestamp"] = rec.timestamp;
  return json_response(200, out);
}

ApiResponse ReviewService::progress() const {
  std::shared_lock lock(state_mutex_);
  std::set<std::size_t> reviewed;
  std::set<std::string> reviewers;
  long long accepted = 0, rejected = 0;
  for (const auto& [key, v] : latest_) {
    reviewed.insert(key.first);
    reviewers.insert(key.second);
    (v == Verdict::Accepted ? accepted : rejected)++;
  }
  Json j;
  j["total_tasks"] = tasks_.size();
  j["reviewed"] = reviewed.size();
  j["pending"] = tasks_.size() - reviewed.size();
  j["complete"] = !tasks_.empty() && reviewed.size() == tasks_.size();
  j["accepted"] = accepted;
  j["rejected"] = rejected;
  j["reviewers"] = reviewers;
  return json_response(200, j);
}

ApiResponse ReviewService::accuracy(const ApiRequest& request) const {
  std::shared_lock lock(state_mutex_);
  auto it = request.query.find("annotator");
  if (it != request.query.end() && !it->second.empty()) {
    return json_response(200, report_json(accuracy_report(records_, it->second)));
  }
  std::vector<std::string> annotators;
  for (const auto& t : tasks_) {
    if (std::find(annotators.begin(), annotators.end(), t.annotator) == annotators.end()) annotators.push_back(t.annotator);
  }
  for (const auto& r : records_) {
    if (std::find(annotators.begin(), annotators.end(), r.annotator) == annotators.end()) annotators.push_back(r.annotator);
  }
  Json list = Json::array();
  for (const auto& a : annotators) list.push_back(report_json(accuracy_report(records_, a)));
  Json j;
  j["annotators"] = list;
  return json_response(200, j);
}

}  // namespace prmkit
