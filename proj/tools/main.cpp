// Copyright 2026 The oldm Authors
// SPDX-License-Identifier: Apache-2.0

#include "cli.hpp"

int main(int argc, char** argv) { return oldm::cli::dispatch(argc, argv); }
