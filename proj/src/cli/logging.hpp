#pragma once

#include <memory>

#include <spdlog/logger.h>

namespace mothscan::cli {

/// Shared stderr logger. Verbosity comes from MOTHSCAN_LOG
/// (error, warn, info, debug); anything else falls back to info.
std::shared_ptr<spdlog::logger> logger();

}  // namespace mothscan::cli
