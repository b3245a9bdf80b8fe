#pragma once

#include <filesystem>
#include <iosfwd>
#include <vector>

#include "netdemix/sirs.hpp"

namespace netdemix {

// Loaded trajectories carry Y only; `states` is left empty because neither
// file format records the S/R distinction.

/// One JSON object per line: graph_id, T, x, Y (N rows of T 0/1), source, seed.
void write_dataset_jsonl(std::span<const Sample> samples, std::ostream& out);
std::vector<Sample> read_dataset_jsonl(std::istream& in);

/// Packed container: 16-byte magic, little-endian u32 N, T, M, then per
/// sample x as f64, Y bit-packed row-major, u32-length-prefixed source list.
void write_dataset_binary(std::span<const Sample> samples, std::ostream& out);
std::vector<Sample> read_dataset_binary(std::istream& in);

/// Dispatches on extension: `.bin` for the packed container, JSON-lines otherwise.
void save_dataset(std::span<const Sample> samples, const std::filesystem::path& path);
std::vector<Sample> load_dataset(const std::filesystem::path& path);

}  // namespace netdemix
