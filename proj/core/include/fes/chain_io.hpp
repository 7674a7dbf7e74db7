// Copyright 2026 The fes Authors
// Licensed under the Apache License, Version 2.0 (see LICENSE file)

#pragma once

#include <filesystem>
#include <string>

#include "fes/diagnostics.hpp"
#include "fes/problems.hpp"

namespace fes {

/// Shortest text that parses back to the same double.
std::string format_double(double v);
double parse_double(const std::string& text);

/// Tab-separated chain file: '#'-prefixed metadata header, then a column
/// line "iteration walker <observables...>" and one row per walker per
/// iteration. Only the "# created" header line depends on when and where
/// the file was written; set `stamp` to false to omit it.
void write_chain(const std::filesystem::path& path, const ChainRecord& record,
                 bool stamp = true);
ChainRecord read_chain(const std::filesystem::path& path);

/// Synthetic observations as a tab-separated table.
void write_dataset(const std::filesystem::path& path, const Dataset& data);

/// Data lines of a file, i.e. without '#' comment lines.
std::string read_body(const std::filesystem::path& path);

}  // namespace fes
