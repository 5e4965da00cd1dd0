#pragma once

#include <compare>
#include <cstdint>
#include <optional>
#include <span>
#include <string_view>

namespace vnode {

/// A language from the node's fixed registry. Instances can only be obtained
/// from the registry, so every LanguageCode is a supported language.
/// Default-constructed values are English.
class LanguageCode {
 public:
  LanguageCode();

  std::string_view code() const;
  std::string_view display_name() const;
  std::uint8_t index() const { return index_; }

  friend bool operator==(LanguageCode a, LanguageCode b) { return a.index_ == b.index_; }
  friend auto operator<=>(LanguageCode a, LanguageCode b) { return a.code() <=> b.code(); }

 private:
  friend class LanguageRegistry;
  explicit LanguageCode(std::uint8_t index) : index_(index) {}

  std::uint8_t index_;
};

class LanguageRegistry {
 public:
  /// All supported languages in registry order.
  static std::span<const LanguageCode> supported();

  /// Case-insensitive lookup by 3-letter code or English name.
  /// Throws Error(unsupported_language).
  static LanguageCode resolve(std::string_view tag);
  static std::optional<LanguageCode> find(std::string_view tag);
};

inline std::span<const LanguageCode> supported_languages() { return LanguageRegistry::supported(); }
inline LanguageCode resolve_language(std::string_view tag) { return LanguageRegistry::resolve(tag); }

}  // namespace vnode
