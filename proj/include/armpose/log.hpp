#pragma once

#include <memory>

#include <spdlog/logger.h>

namespace armpose {

/// Shared stderr logger. The level comes from ARMPOSE_LOG_LEVEL (trace,
/// debug, info, warn, error, critical, off); default warn.
spdlog::logger& log();

}  // namespace armpose
