#pragma once

#include <spdlog/spdlog.h>

#include <memory>

namespace fieldpipe {

/// Library-wide logger writing to standard error under the name "fieldpipe".
std::shared_ptr<spdlog::logger> logger();

enum class Verbosity { Quiet, Normal, Verbose };

void set_verbosity(Verbosity v);

}  // namespace fieldpipe
