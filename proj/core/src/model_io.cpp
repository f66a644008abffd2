#include "seqnlg/model_io.hpp"

#include <fstream>
#include <string>

#include "seqnlg/errors.hpp"

namespace seqnlg::io {

using nlohmann::json;

json tensor_to_json(const Tensor& t) {
  return json{{"shape", t.shape()}, {"data", std::vector<double>(t.values().begin(), t.values().end())}};
}

Tensor tensor_from_json(const json& j, std::string_view what, const std::vector<std::size_t>& expected) {
  const std::string name(what);
  if (!j.is_object() || !j.contains("shape") || !j.contains("data")) {
    throw DataError("tensor '" + name + "' lacks shape or data");
  }
  std::vector<std::size_t> shape;
  std::vector<double> data;
  try {
    shape = j.at("shape").get<std::vector<std::size_t>>();
    data = j.at("data").get<std::vector<double>>();
  } catch (const json::exception& e) {
    throw DataError("tensor '" + name + "': " + e.what());
  }
  if (!expected.empty() && shape != expected) {
    throw DataError("tensor '" + name + "' has shape " + shape_string(shape) + ", expected " +
                    shape_string(expected));
  }
  try {
    return Tensor(std::move(shape), std::move(data));
  } catch (const std::exception& e) {
    throw DataError("tensor '" + name + "': " + e.what());
  }
}

json vocabulary_to_json(const Vocabulary& v) {
  return json{{"tokens", v.tokens()}, {"counts", v.counts()}};
}

Vocabulary vocabulary_from_json(const json& j) {
  try {
    return Vocabulary::from_entries(j.at("tokens").get<std::vector<std::string>>(),
                                    j.at("counts").get<std::vector<std::size_t>>());
  } catch (const json::exception& e) {
    throw DataError(std::string("vocabulary: ") + e.what());
  } catch (const std::invalid_argument& e) {
    throw DataError(std::string("vocabulary: ") + e.what());
  }
}

json make_header(std::string_view kind) {
  return json{{"format", std::string(kind)}, {"format_version", kFormatVersion}};
}

void check_header(const json& j, std::string_view kind) {
  if (!j.is_object() || !j.contains("format") || j.at("format") != std::string(kind)) {
    throw DataError("not a " + std::string(kind) + " file");
  }
  if (!j.contains("format_version") || !j.at("format_version").is_number_integer()) {
    throw DataError(std::string(kind) + " file has no format_version");
  }
  const int version = j.at("format_version").get<int>();
  if (version != kFormatVersion) {
    throw DataError(std::string(kind) + " file has format_version " + std::to_string(version) +
                    " but this build reads version " + std::to_string(kFormatVersion));
  }
}

json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw DataError(path.string() + ": " + e.what());
  }
}

void write_json_file(const std::filesystem::path& path, const json& j) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  out << j.dump(1) << '\n';
  if (!out) throw DataError("write failed for " + path.string());
}

}  // namespace seqnlg::io
