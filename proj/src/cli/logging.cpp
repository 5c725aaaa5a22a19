#include "cli/logging.hpp"

#include <spdlog/sinks/stdout_sinks.h>
#include <spdlog/spdlog.h>

#include <cstdlib>
#include <string_view>

namespace mothscan::cli {
namespace {

std::shared_ptr<spdlog::logger> make_logger() {
    auto log = std::make_shared<spdlog::logger>("mothscan", std::make_shared<spdlog::sinks::stderr_sink_mt>());
    log->set_pattern("%Y-%m-%dT%H:%M:%S %l: %v");
    const char* env = std::getenv("MOTHSCAN_LOG");
    const std::string_view level = env ? env : "info";
    if (level == "error") {
        log->set_level(spdlog::level::err);
    } else if (level == "warn") {
        log->set_level(spdlog::level::warn);
    } else if (level == "debug") {
        log->set_level(spdlog::level::debug);
    } else {
        log->set_level(spdlog::level::info);
        if (level != "info") log->warn("MOTHSCAN_LOG=\"{}\" not recognized, using info", level);
    }
    return log;
}

}  // namespace

std::shared_ptr<spdlog::logger> logger() {
    static const auto instance = make_logger();
    return instance;
}

}  // namespace mothscan::cli
