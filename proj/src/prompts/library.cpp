#include "sg/prompts/library.hpp"

#include <json.hpp>

#include "sg/common/errors.hpp"
#include "sg/common/jsonio.hpp"

namespace sg::prompts {

namespace {

constexpr const char* kOpen = "{{";
constexpr const char* kClose = "}}";

}  // namespace

std::set<std::string> Template::slots() const {
  std::set<std::string> names;
  std::size_t pos = 0;
  while ((pos = text.find(kOpen, pos)) != std::string::npos) {
    auto end = text.find(kClose, pos + 2);
    if (end == std::string::npos) break;
    names.insert(text.substr(pos + 2, end - pos - 2));
    pos = end + 2;
  }
  return names;
}

std::string Template::instantiate(const std::map<std::string, std::string>& values) const {
  auto needed = slots();
  for (const auto& [slot, _] : values) {
    if (needed.count(slot) == 0) {
      throw Error("template '" + name + "' has no slot {{" + slot + "}}");
    }
  }
  for (const auto& slot : needed) {
    if (values.count(slot) == 0) {
      throw Error("template '" + name + "' slot {{" + slot + "}} not filled");
    }
  }
  std::string out;
  out.reserve(text.size());
  std::size_t last = 0;
  std::size_t pos = 0;
  while ((pos = text.find(kOpen, last)) != std::string::npos) {
    auto end = text.find(kClose, pos + 2);
    if (end == std::string::npos) break;
    out.append(text, last, pos - last);
    out += values.at(text.substr(pos + 2, end - pos - 2));
    last = end + 2;
  }
  out.append(text, last, std::string::npos);
  return out;
}

std::string Template::fingerprint() const {
  std::size_t start = 0;
  while (start < text.size()) {
    auto end = text.find('\n', start);
    if (end == std::string::npos) end = text.size();
    std::string line = text.substr(start, end - start);
    if (line.find_first_not_of(" \t\r") != std::string::npos && line.find(kOpen) == std::string::npos) {
      return line;
    }
    start = end + 1;
  }
  return text;
}

Library Library::load(const std::filesystem::path& dir) {
  auto manifest = read_json_file(dir / "manifest.json");
  Library lib;
  for (const auto& [name, file] : manifest.items()) {
    Template tpl;
    tpl.name = name;
    tpl.text = read_text_file(dir / file.get<std::string>());
    lib.templates_.emplace(name, std::move(tpl));
  }
  return lib;
}

const Template& Library::get(const std::string& name) const {
  auto it = templates_.find(name);
  if (it == templates_.end()) throw Error("prompt library has no template '" + name + "'");
  return it->second;
}

}  // namespace sg::prompts
