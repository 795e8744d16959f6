// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace sarc::io {

std::vector<char> read_file(const std::filesystem::path& path);
std::string read_text(const std::filesystem::path& path);

// Writes to `<path>.tmp` and renames over `path`, so readers never see a
// half-written file.
void write_file_atomic(const std::filesystem::path& path, std::span<const char> bytes);
void write_file_atomic(const std::filesystem::path& path, std::string_view text);

// Collects every artifact of a command in memory and writes them only once the
// command has finished. A failure before commit() leaves the output directory
// untouched.
class ArtifactSet {
 public:
  void add(std::filesystem::path relative, std::string contents);
  void add(std::filesystem::path relative, std::vector<char> contents);
  void commit(const std::filesystem::path& root) const;

  std::size_t size() const { return entries_.size(); }

 private:
  struct Entry {
    std::filesystem::path relative;
    std::vector<char> contents;
  };
  std::vector<Entry> entries_;
};

// Little-endian binary32 encoding independent of host byte order.
void append_f32_le(std::vector<char>& out, float value);
float read_f32_le(const char* bytes);

}  // namespace sarc::io
