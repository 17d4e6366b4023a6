#include "prmkit/dataset.hpp"

#include <fstream>
#include <set>
#include <json.hpp>

#include "prmkit/error.hpp"
#include "prmkit/text.hpp"

namespace prmkit {

using Json = nlohmann::ordered_json;

namespace {

Json parse_line(std::string_view line, std::size_t line_number) {
  try {
    Json j = Json::parse(line);
    if (!j.is_object()) throw DatasetError(line_number, "<record>", "expected a JSON object");
    return j;
  } catch (const nlohmann::json::exception& e) {
    throw DatasetError(line_number, "<json>", e.what());
  }
}

const Json& field(const Json& j, const char* name, std::size_t line) {
  auto it = j.find(name);
  if (it == j.end()) throw DatasetError(line, name, "missing");
  return *it;
}

std::string get_string(const Json& j, const char* name, std::size_t line) {
  const Json& v = field(j, name, line);
  if (!v.is_string()) throw DatasetError(line, name, "expected a string");
  return v.get<std::string>();
}

std::string get_string_or(const Json& j, const char* name, std::size_t line, std::string fallback) {
  if (!j.contains(name) || j.at(name).is_null()) return fallback;
  return get_string(j, name, line);
}

std::vector<std::string> get_strings(const Json& j, const char* name, std::size_t line) {
  const Json& v = field(j, name, line);
  if (!v.is_array()) throw DatasetError(line, name, "expected an array");
  std::vector<std::string> out;
  for (const auto& item : v) {
    if (!item.is_string()) throw DatasetError(line, name, "expected an array of strings");
    out.push_back(item.get<std::string>());
  }
  return out;
}

Json problem_json(const Problem& p) {
  Json j;
  j["problem_id"] = p.id;
  j["problem"] = p.statement;
  j["gold_answer"] = p.gold_answer;
  j["source"] = p.source_tag;
  return j;
}

Problem problem_from(const Json& j, std::size_t line) {
  try {
    return Problem::make(get_string(j, "problem_id", line), get_string(j, "problem", line),
                         get_string(j, "gold_answer", line), get_string_or(j, "source", line, ""));
  } catch (const DatasetError&) {
    throw;
  } catch (const ValidationError& e) {
    throw DatasetError(line, "problem_id", e.what());
  }
}

void put_trace(Json& j, const ReasoningTrace& trace) {
  j["generator"] = trace.generator_tag;
  j["steps"] = trace.texts();
  if (trace.final_answer) j["final_answer"] = *trace.final_answer;
}

ReasoningTrace trace_from(const Json& j, const std::string& problem_id, std::size_t line) {
  const auto texts = get_strings(j, "steps", line);
  ReasoningTrace trace;
  try {
    trace = ReasoningTrace::from_texts(problem_id, texts, get_string_or(j, "generator", line, ""));
  } catch (const DatasetError&) {
    throw;
  } catch (const ValidationError& e) {
    throw DatasetError(line, "steps", e.what());
  }
  if (j.contains("final_answer") && !j.at("final_answer").is_null()) {
    trace.final_answer = get_string(j, "final_answer", line);
  } else {
    trace.final_answer.reset();
  }
  return trace;
}

std::vector<std::pair<std::size_t, std::string>> lines_of(const std::filesystem::path& path) {
  return read_jsonl_lines(path);
}

template <typename T, typename Encode>
std::size_t write_lines(std::span<const T> records, const std::filesystem::path& path, Encode encode) {
  std::string buffer;
  for (const auto& r : records) {
    buffer += encode(r);
    buffer += '\n';
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ValidationError("cannot open " + path.string() + " for writing");
  out << buffer;
  out.flush();
  if (!out) throw ValidationError("failed writing " + path.string());
  return records.size();
}

}  // namespace

std::string encode_record(const DatasetRecord& record) {
  const AnnotatedTrace& a = record.annotated;
  Json j = problem_json(record.problem);
  put_trace(j, a.trace());
  Json labels = Json::array();
  Json rationales = Json::array();
  Json tags = Json::array();
  bool any_tag = false;
  for (const auto& ann : a.annotations()) {
    labels.push_back(ann.label);
    rationales.push_back(ann.rationale);
    if (ann.local_tag) {
      tags.push_back(std::string(to_string(ann.local_tag->event)));
      any_tag = true;
    } else {
      tags.push_back(nullptr);
    }
  }
  j["labels"] = labels;
  j["rationales"] = rationales;
  j["annotator"] = a.annotator();
  j["solution_correct"] = a.solution_correct();
  if (any_tag) {
    j["local_tags"] = tags;
    const auto& last = a.annotations().back().local_tag;
    if (last && last->final_answer_matches) j["final_answer_matches"] = *last->final_answer_matches;
  }
  return j.dump();
}

DatasetRecord decode_record(std::string_view line, std::size_t line_number) {
  const Json j = parse_line(line, line_number);
  Problem problem = problem_from(j, line_number);
  ReasoningTrace trace = trace_from(j, problem.id, line_number);
  const std::size_t k = trace.size();

  const Json& labels = field(j, "labels", line_number);
  if (!labels.is_array()) throw DatasetError(line_number, "labels", "expected an array");
  if (labels.size() != k) {
    throw DatasetError(line_number, "labels",
                       "length " + std::to_string(labels.size()) + " != steps " + std::to_string(k));
  }
  const auto rationales = get_strings(j, "rationales", line_number);
  if (rationales.size() != k) {
    throw DatasetError(line_number, "rationales",
                       "length " + std::to_string(rationales.size()) + " != steps " + std::to_string(k));
  }
  const std::string annotator = get_string(j, "annotator", line_number);
  const Json& correct = field(j, "solution_correct", line_number);
  if (!correct.is_boolean()) throw DatasetError(line_number, "solution_correct", "expected a boolean");

  std::vector<std::optional<LocalEventTag>> tags(k);
  if (j.contains("local_tags") && !j.at("local_tags").is_null()) {
    const Json& lt = j.at("local_tags");
    if (!lt.is_array() || lt.size() != k) {
      throw DatasetError(line_number, "local_tags", "expected an array with one entry per step");
    }
    for (std::size_t i = 0; i < k; ++i) {
      if (lt[i].is_null()) continue;
      if (!lt[i].is_string()) throw DatasetError(line_number, "local_tags", "expected strings");
      auto ev = parse_local_event(lt[i].get<std::string>());
      if (!ev) throw DatasetError(line_number, "local_tags", "unknown event '" + lt[i].get<std::string>() + "'");
      tags[i] = LocalEventTag{*ev, std::nullopt};
    }
    if (tags.back()) {
      const Json& fam = field(j, "final_answer_matches", line_number);
      if (!fam.is_boolean()) throw DatasetError(line_number, "final_answer_matches", "expected a boolean");
      tags.back()->final_answer_matches = fam.get<bool>();
    }
  }

  std::vector<StepAnnotation> anns;
  anns.reserve(k);
  for (std::size_t i = 0; i < k; ++i) {
    if (!labels[i].is_number_integer()) throw DatasetError(line_number, "labels", "expected integers");
    const int label = labels[i].get<int>();
    if (label != 0 && label != 1) throw DatasetError(line_number, "labels", "label must be 0 or 1");
    anns.push_back(StepAnnotation{static_cast<int>(i), label, rationales[i], tags[i], annotator});
  }
  try {
    return DatasetRecord{std::move(problem),
                         AnnotatedTrace::create(std::move(trace), std::move(anns), correct.get<bool>())};
  } catch (const DatasetError&) {
    throw;
  } catch (const ValidationError& e) {
    throw DatasetError(line_number, "labels", e.what());
  }
}

std::string encode_trace_record(const TraceRecord& record) {
  Json j = problem_json(record.problem);
  put_trace(j, record.trace);
  return j.dump();
}

TraceRecord decode_trace_record(std::string_view line, std::size_t line_number) {
  const Json j = parse_line(line, line_number);
  Problem problem = problem_from(j, line_number);
  ReasoningTrace trace = trace_from(j, problem.id, line_number);
  return TraceRecord{std::move(problem), std::move(trace)};
}

std::size_t write_dataset(std::span<const DatasetRecord> records, const std::filesystem::path& path) {
  return write_lines(records, path, encode_record);
}

std::vector<DatasetRecord> read_dataset(const std::filesystem::path& path) {
  std::vector<DatasetRecord> out;
  for (const auto& [n, line] : lines_of(path)) out.push_back(decode_record(line, n));
  return out;
}

std::size_t write_traces(std::span<const TraceRecord> records, const std::filesystem::path& path) {
  return write_lines(records, path, encode_trace_record);
}

std::vector<TraceRecord> read_traces(const std::filesystem::path& path) {
  std::vector<TraceRecord> out;
  for (const auto& [n, line] : lines_of(path)) out.push_back(decode_trace_record(line, n));
  return out;
}

std::size_t write_problems(std::span<const Problem> problems, const std::filesystem::path& path) {
  return write_lines(problems, path, [](const Problem& p) { return problem_json(p).dump(); });
}

std::vector<Problem> read_problems(const std::filesystem::path& path) {
  std::vector<Problem> out;
  std::set<std::string> seen;
  for (const auto& [n, line] : lines_of(path)) {
    out.push_back(problem_from(parse_line(line, n), n));
    if (!seen.insert(out.back().id).second) throw DatasetError(n, "problem_id", "duplicate id '" + out.back().id + "'");
  }
  return out;
}

std::vector<std::pair<std::size_t, std::string>> read_jsonl_lines(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open " + path.string());
  std::vector<std::pair<std::size_t, std::string>> out;
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (trim_view(line).empty()) continue;
    out.emplace_back(n, line);
  }
  return out;
}

}  // namespace prmkit
