#pragma once

#include <doctest.h>

#include <filesystem>
#include <random>
#include <string>

#include "flexac/errors.hpp"

// CHECK that `expr` throws flexac::Error carrying `expected`.
#define CHECK_FLEXAC_ERROR(expr, expected)                                  \
    do {                                                                    \
        bool flexac_thrown_ = false;                                        \
        try {                                                               \
            (void)(expr);                                                   \
        } catch (const ::flexac::Error& e) {                                \
            flexac_thrown_ = true;                                          \
            CHECK_MESSAGE(e.code() == (expected), "got ", e.what());        \
        }                                                                   \
        CHECK_MESSAGE(flexac_thrown_, "expected ", ::flexac::error_name(expected)); \
    } while (0)

namespace flexac::testing {

inline std::filesystem::path scratch_dir(const std::string& name) {
    static std::random_device rd;
    auto dir = std::filesystem::temp_directory_path() /
               ("flexac_" + name + "_" + std::to_string(rd()));
    std::filesystem::create_directories(dir);
    return dir;
}

}  // namespace flexac::testing
