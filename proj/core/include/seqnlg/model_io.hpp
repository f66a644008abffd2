#pragma once

#include <filesystem>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "seqnlg/tensor.hpp"
#include "seqnlg/vocabulary.hpp"

namespace seqnlg::io {

/// Bumped whenever the layout of persisted models changes.
inline constexpr int kFormatVersion = 1;

nlohmann::json tensor_to_json(const Tensor& t);
/// Throws DataError on a malformed entry; `expected` (if non-empty) must match.
Tensor tensor_from_json(const nlohmann::json& j, std::string_view what, const std::vector<std::size_t>& expected = {});

nlohmann::json vocabulary_to_json(const Vocabulary& v);
Vocabulary vocabulary_from_json(const nlohmann::json& j);

/// {"format": kind, "format_version": kFormatVersion}
nlohmann::json make_header(std::string_view kind);
/// Throws DataError unless `j` carries the given kind and the current version.
void check_header(const nlohmann::json& j, std::string_view kind);

nlohmann::json read_json_file(const std::filesystem::path& path);
void write_json_file(const std::filesystem::path& path, const nlohmann::json& j);

}  // namespace seqnlg::io
