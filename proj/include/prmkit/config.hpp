#pragma once

#include <filesystem>
#include <string>

#include "prmkit/http_backend.hpp"
#include "prmkit/judge.hpp"
#include "prmkit/mc.hpp"
#include "prmkit/segmenter.hpp"
#include "prmkit/sim_world.hpp"
#include "prmkit/toy_prm.hpp"

namespace prmkit {

struct ReviewConfig {
  std::string host = "127.0.0.1";
  int port = 8765;
  std::string dataset;
  std::string journal = "review_journal.jsonl";
};

struct ToolkitConfig {
  SegmentationConfig segmentation;
  HttpBackendConfig backend;
  AnnotateOptions annotation;
  int annotation_parallel = 4;
  McConfig mc;
  TrainConfig train;
  SimWorld sim;
  ReviewConfig review;
};

/// Parses the TOML config ([segmentation], [backend], [annotation], [mc],
/// [train], [sim], [review]). Unknown sections and keys are rejected. The API
/// key is always taken from the environment.
ToolkitConfig parse_config(std::string_view toml_text, const std::filesystem::path& base_dir = {});
ToolkitConfig load_config(const std::filesystem::path& path);

}  // namespace prmkit
