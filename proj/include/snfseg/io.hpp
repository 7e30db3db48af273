#pragma once

#include <filesystem>
#include <string>
#include <string_view>

#include "snfseg/types.hpp"

namespace snfseg {

std::string read_text_file(const std::filesystem::path& path);

/// Writes to a sibling temporary file and renames it over `path`.
void write_file_atomic(const std::filesystem::path& path, std::string_view contents);

/// Plain comma-separated rows, no header, 17 significant digits.
std::string format_matrix_csv(const Matrix& m);
void write_matrix_csv(const std::filesystem::path& path, const Matrix& m);

/// Parses a square CSV matrix; errors carry the file name and line number.
Matrix parse_matrix_csv(std::string_view text, const std::string& origin = "<csv>");
Matrix read_matrix_csv(const std::filesystem::path& path);

/// Feature file: {"framerate_hz": r, "kind": "mfcc"|"chroma"|"tempogram"|"crema", "data": [[...], ...]}
FeatureMatrix parse_feature_json(std::string_view text, const std::string& origin = "<json>");
std::string format_feature_json(const FeatureMatrix& f);

}  // namespace snfseg
