// Copyright 2026 The oldm Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <string>
#include <vector>

namespace oldm::cli {

// Runs one tool invocation. Returns 0 on success, 1 on usage or validation
// errors, 2 on I/O errors. `args` excludes the program name.
int dispatch(const std::vector<std::string>& args);
int dispatch(int argc, const char* const* argv);

}  // namespace oldm::cli
