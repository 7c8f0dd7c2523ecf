#pragma once

#include <filesystem>
#include <map>
#include <set>
#include <string>

namespace sg::prompts {

/// A named template with {{SLOT}} markers.
struct Template {
  std::string name;
  std::string text;

  std::set<std::string> slots() const;
  /// Substitutes every slot. Throws if a slot is left unfilled or an unknown
  /// slot value is supplied.
  std::string instantiate(const std::map<std::string, std::string>& values) const;
  /// First non-empty line; used as a distinctive marker for substring scans.
  std::string fingerprint() const;
};

/// Loads templates from a directory with a manifest.json mapping
/// template name -> file name.
class Library {
 public:
  static Library load(const std::filesystem::path& dir);

  const Template& get(const std::string& name) const;
  bool has(const std::string& name) const { return templates_.count(name) > 0; }

  // The template names the harness relies on.
  static constexpr const char* kThreatTaskNoCot = "threat_task_no_cot";
  static constexpr const char* kThreatTaskCot = "threat_task_cot";
  static constexpr const char* kSgSimple = "sg_simple";
  static constexpr const char* kSgDetection = "sg_detection";
  static constexpr const char* kSgTranslation = "sg_translation";
  static constexpr const char* kSgTranslationFewShot = "sg_translation_few_shot";
  static constexpr const char* kNonThreatTaskNoCot = "nonthreat_task_no_cot";
  static constexpr const char* kNonThreatTaskCot = "nonthreat_task_cot";
  static constexpr const char* kPersonaTask = "persona_task";

 private:
  std::map<std::string, Template> templates_;
};

}  // namespace sg::prompts
