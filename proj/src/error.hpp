// Copyright (c) 2026 dgsa-lab contributors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <stdexcept>
#include <string>

namespace dgsa {

// Error taxonomy. Each class maps to one process exit code / C-API status:
// usage/config -> 1, data/format/io -> 2, numeric/dimension -> 3.
struct Error : std::runtime_error {
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

struct UsageError : Error {
    using Error::Error;
};
struct ConfigError : UsageError {
    using UsageError::UsageError;
};

struct DataError : Error {
    using Error::Error;
};
struct IoError : DataError {
    using DataError::DataError;
};

struct NumericError : Error {
    using Error::Error;
};
struct DimensionError : NumericError {
    using NumericError::NumericError;
};

}  // namespace dgsa
