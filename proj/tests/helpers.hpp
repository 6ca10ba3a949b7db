#pragma once

#include <filesystem>
#include <stdexcept>
#include <string>

#include "mcastle/errors.hpp"

namespace mctest {

// Runs fn expecting it to raise; returns the code so tests can assert on it.
template <class F>
mcastle::Errc code_of(F&& fn) {
    try {
        fn();
    } catch (const mcastle::Error& e) {
        return e.code();
    }
    throw std::runtime_error("expected the operation to raise an Error");
}

inline std::filesystem::path temp_dir() {
    const auto p = std::filesystem::temp_directory_path() / "mcastle_tests";
    std::filesystem::create_directories(p);
    return p;
}

}  // namespace mctest
