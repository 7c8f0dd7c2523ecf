#include "sg/common/jsonio.hpp"

#include <fstream>
#include <sstream>

#include "sg/common/errors.hpp"

namespace sg {

nlohmann::json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open file: " + path.string());
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& ex) {
    throw SchemaError("failed to parse " + path.string() + ": " + ex.what());
  }
}

void write_json_file(const std::filesystem::path& path, const nlohmann::json& value, int indent) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw IoError("cannot write file: " + path.string());
  out << value.dump(indent) << '\n';
  if (!out.good()) throw IoError("write failed: " + path.string());
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open file: " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_text_file(const std::filesystem::path& path, const std::string& content) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write file: " + path.string());
  out << content;
  if (!out.good()) throw IoError("write failed: " + path.string());
}

}  // namespace sg
