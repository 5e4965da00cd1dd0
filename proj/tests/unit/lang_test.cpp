#include <gtest/gtest.h>

#include <set>
#include <vector>

#include "vnode/error.hpp"
#include "vnode/lang.hpp"

using namespace vnode;

TEST(Lang, RegistryHas36UniqueCodes) {
  auto all = supported_languages();
  EXPECT_EQ(all.size(), 36u);
  std::set<std::string_view> codes;
  for (auto l : all) {
    EXPECT_EQ(l.code().size(), 3u);
    EXPECT_FALSE(l.display_name().empty());
    codes.insert(l.code());
  }
  EXPECT_EQ(codes.size(), 36u);
  EXPECT_EQ(all.front().code(), "arb");
  EXPECT_EQ(all.back().code(), "vie");
}

TEST(Lang, ResolvesCodesAndNamesCaseInsensitively) {
  EXPECT_EQ(resolve_language("fra").display_name(), "French");
  EXPECT_EQ(resolve_language("FRA"), resolve_language("fra"));
  EXPECT_EQ(resolve_language("french").code(), "fra");
  EXPECT_EQ(LanguageCode().code(), "eng");
}

TEST(Lang, RejectsUnsupported) {
  EXPECT_FALSE(LanguageRegistry::find("xx"));
  EXPECT_FALSE(LanguageRegistry::find(""));
  try {
    resolve_language("klingon");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::unsupported_language);
  }
}

TEST(Lang, DisplayNamesInPublishedOrder) {
  const std::vector<std::string_view> expected{
      "Modern Standard Arabic", "Bengali", "Catalan", "Czech", "Mandarin Chinese", "Welsh", "Danish", "German",
      "English", "Estonian", "Finnish", "French", "Hindi", "Indonesian", "Italian", "Japanese", "Korean", "Maltese",
      "Dutch", "Persian", "Polish", "Portuguese", "Romanian", "Russian", "Slovak", "Spanish", "Swedish", "Swahili",
      "Telugu", "Tagalog", "Thai", "Turkish", "Ukrainian", "Urdu", "Northern Uzbek", "Vietnamese"};
  auto all = supported_languages();
  ASSERT_EQ(all.size(), expected.size());
  for (std::size_t i = 0; i < expected.size(); ++i) EXPECT_EQ(all[i].display_name(), expected[i]) << i;
}
