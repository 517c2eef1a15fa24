#include "armpose/log.hpp"

#include <cstdlib>

#include <spdlog/sinks/stdout_sinks.h>

namespace armpose {

spdlog::logger& log() {
  static const std::shared_ptr<spdlog::logger> logger = [] {
    auto l = std::make_shared<spdlog::logger>(
        "armpose", std::make_shared<spdlog::sinks::stderr_sink_mt>());
    l->set_pattern("[%l] %v");
    l->set_level(spdlog::level::warn);
    if (const char* env = std::getenv("ARMPOSE_LOG_LEVEL"))
      l->set_level(spdlog::level::from_str(env));
    return l;
  }();
  return *logger;
}

}  // namespace armpose
