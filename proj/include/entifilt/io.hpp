#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace entifilt {

// Writes to <path>.tmp~ and renames, so readers never see a partial file.
void atomic_write(const std::string& path, const std::string& content);

std::string read_file(const std::string& path);

// FNV-1a over the canonical form; used for config fingerprints.
std::uint64_t fnv1a64(const std::string& s);
std::string hash_hex(std::uint64_t h);

std::vector<std::string> split_csv(const std::string& s);

}  // namespace entifilt
