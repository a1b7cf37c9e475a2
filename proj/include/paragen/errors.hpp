// Copyright (c) 2026 paragen contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>

namespace paragen {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Dimension or index violations in tensor code.
struct ShapeError : Error {
  using Error::Error;
};

// File format, parse and filesystem problems.
struct IoError : Error {
  using Error::Error;
};

// Invalid configuration values.
struct ConfigError : Error {
  using Error::Error;
};

}  // namespace paragen
