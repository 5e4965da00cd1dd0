#include "vnode/lang.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <string>

#include "vnode/error.hpp"

namespace vnode {
namespace {

struct Entry {
  std::string_view code;
  std::string_view name;
};

// SeamlessM4T-style codes, in the published enumeration order.
constexpr std::array<Entry, 36> kEntries{{
    {"arb", "Modern Standard Arabic"},
    {"ben", "Bengali"},
    {"cat", "Catalan"},
    {"ces", "Czech"},
    {"cmn", "Mandarin Chinese"},
    {"cym", "Welsh"},
    {"dan", "Danish"},
    {"deu", "German"},
    {"eng", "English"},
    {"est", "Estonian"},
    {"fin", "Finnish"},
    {"fra", "French"},
    {"hin", "Hindi"},
    {"ind", "Indonesian"},
    {"ita", "Italian"},
    {"jpn", "Japanese"},
    {"kor", "Korean"},
    {"mlt", "Maltese"},
    {"nld", "Dutch"},
    {"pes", "Persian"},
    {"pol", "Polish"},
    {"por", "Portuguese"},
    {"ron", "Romanian"},
    {"rus", "Russian"},
    {"slk", "Slovak"},
    {"spa", "Spanish"},
    {"swe", "Swedish"},
    {"swh", "Swahili"},
    {"tel", "Telugu"},
    {"tgl", "Tagalog"},
    {"tha", "Thai"},
    {"tur", "Turkish"},
    {"ukr", "Ukrainian"},
    {"urd", "Urdu"},
    {"uzn", "Northern Uzbek"},
    {"vie", "Vietnamese"},
}};

constexpr std::uint8_t kEnglish = 8;

bool iequals(std::string_view a, std::string_view b) {
  return a.size() == b.size() &&
         std::equal(a.begin(), a.end(), b.begin(), [](char x, char y) {
           return std::tolower(static_cast<unsigned char>(x)) ==
                  std::tolower(static_cast<unsigned char>(y));
         });
}

}  // namespace

LanguageCode::LanguageCode() : index_(kEnglish) {}

std::string_view LanguageCode::code() const { return kEntries[index_].code; }
std::string_view LanguageCode::display_name() const { return kEntries[index_].name; }

std::span<const LanguageCode> LanguageRegistry::supported() {
  static const auto all = [] {
    std::array<LanguageCode, kEntries.size()> out{};
    for (std::size_t i = 0; i < kEntries.size(); ++i) out[i] = LanguageCode(static_cast<std::uint8_t>(i));
    return out;
  }();
  return all;
}

std::optional<LanguageCode> LanguageRegistry::find(std::string_view tag) {
  for (std::size_t i = 0; i < kEntries.size(); ++i) {
    if (iequals(tag, kEntries[i].code) || iequals(tag, kEntries[i].name)) {
      return LanguageCode(static_cast<std::uint8_t>(i));
    }
  }
  return std::nullopt;
}

LanguageCode LanguageRegistry::resolve(std::string_view tag) {
  if (tag.empty()) fail(Errc::unsupported_language, "empty language tag");
  if (auto found = find(tag)) return *found;
  fail(Errc::unsupported_language, "unsupported language: " + std::string(tag));
}

}  // namespace vnode
