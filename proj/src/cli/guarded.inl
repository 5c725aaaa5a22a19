#pragma once

#include <exception>

#include <nlohmann/json.hpp>

#include "cli/logging.hpp"
#include "mothscan/errors.hpp"

namespace mothscan::cli {

template <typename F>
int guarded(F&& body) {
    try {
        return body();
    } catch (const mothscan::Error& e) {
        logger()->error("{}", e.what());
        return kInputError;
    } catch (const nlohmann::json::exception& e) {
        logger()->error("{}", e.what());
        return kInputError;
    } catch (const std::filesystem::filesystem_error& e) {
        logger()->error("{}", e.what());
        return kInputError;
    } catch (const std::exception& e) {
        logger()->error("internal error: {}", e.what());
        return kInternalError;
    }
}

}  // namespace mothscan::cli
