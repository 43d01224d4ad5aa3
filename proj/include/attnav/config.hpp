#pragma once

#include <filesystem>
#include <string>

#include "attnav/evaluator.hpp"
#include "attnav/trainer.hpp"

namespace attnav {

struct WorkbenchConfig {
  TrainConfig train;
  EvalOptions eval;
};

// INI-style "key = value" file with sections [train], [loss], [model],
// [attention], [adaptation] and [eval]. Keys not present keep the values in
// base. Unknown keys or unparsable values throw FormatError.
WorkbenchConfig load_config(const std::filesystem::path& path, WorkbenchConfig base = {});
WorkbenchConfig parse_config(const std::string& text, WorkbenchConfig base = {});

}  // namespace attnav
