#pragma once

#include <cstddef>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "prmkit/types.hpp"

// JSONL persistence. One record per line:
//   problem_id, problem (statement), gold_answer, source, generator,
//   steps[], final_answer?, and for annotated records labels[], rationales[],
//   annotator, solution_correct, local_tags[]?, final_answer_matches?.
// Parallel arrays must have equal length. Decoding errors name the 1-based
// line and the field; a failed read never returns a partial result.
namespace prmkit {

std::string encode_record(const DatasetRecord& record);
DatasetRecord decode_record(std::string_view line, std::size_t line_number = 1);

std::string encode_trace_record(const TraceRecord& record);
/// Accepts annotated records too; labels are ignored.
TraceRecord decode_trace_record(std::string_view line, std::size_t line_number = 1);

std::size_t write_dataset(std::span<const DatasetRecord> records, const std::filesystem::path& path);
std::vector<DatasetRecord> read_dataset(const std::filesystem::path& path);

std::size_t write_traces(std::span<const TraceRecord> records, const std::filesystem::path& path);
std::vector<TraceRecord> read_traces(const std::filesystem::path& path);

/// Problem-only records: problem_id, problem, gold_answer, source. Ids must be
/// unique within a problem file.
std::size_t write_problems(std::span<const Problem> problems, const std::filesystem::path& path);
std::vector<Problem> read_problems(const std::filesystem::path& path);

/// Reads non-blank lines; throws ValidationError if the file cannot be opened.
std::vector<std::pair<std::size_t, std::string>> read_jsonl_lines(const std::filesystem::path& path);

}  // namespace prmkit
