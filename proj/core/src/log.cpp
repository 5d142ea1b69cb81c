#include "fieldpipe/log.hpp"

#include <spdlog/sinks/stdout_color_sinks.h>

namespace fieldpipe {

std::shared_ptr<spdlog::logger> logger() {
  static std::shared_ptr<spdlog::logger> instance = [] {
    auto sink = std::make_shared<spdlog::sinks::stderr_color_sink_mt>();
    auto log = std::make_shared<spdlog::logger>("fieldpipe", sink);
    log->set_pattern("[%l] %v");
    log->set_level(spdlog::level::info);
    return log;
  }();
  return instance;
}

void set_verbosity(Verbosity v) {
  switch (v) {
    case Verbosity::Quiet:
      logger()->set_level(spdlog::level::err);
      break;
    case Verbosity::Normal:
      logger()->set_level(spdlog::level::info);
      break;
    case Verbosity::Verbose:
      logger()->set_level(spdlog::level::debug);
      break;
  }
}

}  // namespace fieldpipe
