#include <gtest/gtest.h>

#include <string>
#include <utility>
#include <vector>

#include "qfsum/porter_stemmer.hpp"

namespace {

// Reference outputs of the original C implementation (which differs from
// the published algorithm in step 2: "bli" -> "ble" and "logi" -> "log").
const std::vector<std::pair<std::string, std::string>> kVectors = {
    {"running", "run"},       {"runs", "run"},          {"caresses", "caress"},   {"ponies", "poni"},
    {"ties", "ti"},           {"cats", "cat"},          {"feed", "feed"},         {"agreed", "agre"},
    {"plastered", "plaster"}, {"motoring", "motor"},    {"sing", "sing"},         {"conflated", "conflat"},
    {"troubled", "troubl"},   {"sized", "size"},        {"hopping", "hop"},       {"tanned", "tan"},
    {"falling", "fall"},      {"hissing", "hiss"},      {"fizzed", "fizz"},       {"failing", "fail"},
    {"filing", "file"},       {"happy", "happi"},       {"sky", "sky"},           {"relational", "relat"},
    {"conditional", "condit"}, {"rational", "ration"},  {"valenci", "valenc"},    {"hesitanci", "hesit"},
    {"digitizer", "digit"},   {"conformabli", "conform"}, {"radicalli", "radic"}, {"differentli", "differ"},
    {"vileli", "vile"},       {"analogousli", "analog"}, {"vietnamization", "vietnam"},
    {"predication", "predic"}, {"operator", "oper"},    {"feudalism", "feudal"},  {"decisiveness", "decis"},
    {"hopefulness", "hope"},  {"callousness", "callous"}, {"formaliti", "formal"}, {"sensitiviti", "sensit"},
    {"sensibiliti", "sensibl"}, {"triplicate", "triplic"}, {"formative", "form"}, {"formalize", "formal"},
    {"electriciti", "electr"}, {"electrical", "electr"}, {"hopeful", "hope"},     {"goodness", "good"},
    {"revival", "reviv"},     {"allowance", "allow"},   {"inference", "infer"},   {"airliner", "airlin"},
    {"gyroscopic", "gyroscop"}, {"adjustable", "adjust"}, {"defensible", "defens"}, {"irritant", "irrit"},
    {"replacement", "replac"}, {"adjustment", "adjust"}, {"dependent", "depend"}, {"adoption", "adopt"},
    {"homologou", "homolog"}, {"communism", "commun"},  {"activate", "activ"},    {"angulariti", "angular"},
    {"homologous", "homolog"}, {"effective", "effect"}, {"bowdlerize", "bowdler"}, {"probate", "probat"},
    {"rate", "rate"},         {"cease", "ceas"},        {"controll", "control"},  {"roll", "roll"},
    {"generalization", "gener"}, {"oscillators", "oscil"}, {"a", "a"},           {"is", "is"},
    {"as", "as"},             {"news", "new"},
};

TEST(PorterStemmer, MatchesReferenceVectors) {
  for (const auto& [word, stem] : kVectors) EXPECT_EQ(qfsum::porter_stem(word), stem) << word;
}

TEST(PorterStemmer, LeavesNonLowercaseAsciiAlone) {
  EXPECT_EQ(qfsum::porter_stem("Running"), "Running");
  EXPECT_EQ(qfsum::porter_stem("2019s"), "2019s");
  EXPECT_EQ(qfsum::porter_stem("caf\xc3\xa9s"), "caf\xc3\xa9s");
  EXPECT_EQ(qfsum::porter_stem(""), "");
}

TEST(PorterStemmer, StemNeverGrowsWhenReapplied) {
  for (const auto& [word, stem] : kVectors) EXPECT_LE(qfsum::porter_stem(stem).size(), stem.size()) << stem;
}

}  // namespace
