#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace sdmia {

std::string Trim(std::string_view s);
// Lowercase with runs of whitespace collapsed to one space and trimmed.
// Two captions are considered the same rewrite iff these agree.
std::string NormalizeForCompare(std::string_view s);
// Lowercase alphanumeric runs.
std::vector<std::string> Tokenize(std::string_view s);
std::vector<std::string> SplitWhitespace(std::string_view s);
std::string Join(const std::vector<std::string>& parts, std::string_view sep);

std::string ReadFile(const std::filesystem::path& path);
// Writes via a temporary sibling and rename so readers never see partial files.
void WriteFileAtomic(const std::filesystem::path& path, std::string_view bytes);

// Shortest round-trippable decimal rendering of a double.
std::string FormatDouble(double x);

}  // namespace sdmia
