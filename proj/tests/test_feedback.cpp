#include <catch2/catch_amalgamated.hpp>

#include <limits>
#include <map>

#include "fado/feedback.hpp"
#include "fado/rng.hpp"

using namespace fado;

namespace {

std::string fixture(const std::string& name) {
  return std::string(FADO_FIXTURE_DIR) + "/" + name;
}

struct Turn {
  Speaker speaker;
  std::string text;
  int rating = -1;  // -1 = none
};

Conversation make_conv(const std::vector<Turn>& turns) {
  Conversation c;
  c.id = "t";
  for (size_t i = 0; i < turns.size(); ++i) {
    Utterance u;
    u.speaker = turns[i].speaker;
    u.text = turns[i].text;
    if (turns[i].rating != -1) u.rating = turns[i].rating;
    u.index = static_cast<int>(i);
    c.utterances.push_back(u);
  }
  return c;
}

// Test double returning a fixed score per exact text.
class TableScorer : public EmotionScorer {
 public:
  explicit TableScorer(std::map<std::string, double> table) : table_(std::move(table)) {}
  int dim() const override { return 1; }
  std::string name() const override { return "table"; }
  Mat encode_layout(const ContextLayout& layout) const override {
    return Mat(layout.length(), 1);
  }
  double positive_score(const std::string& text) const override { return table_.at(text); }

 private:
  std::map<std::string, double> table_;
};

}  // namespace

TEST_CASE("turn emotion delta") {
  TableScorer scorer({{"a", 0.30}, {"b", 0.55}, {"x", 0.9}});
  auto conv = make_conv({{Speaker::seeker, "a"},
                         {Speaker::supporter, "x"},
                         {Speaker::seeker, "b"},
                         {Speaker::supporter, "x"}});

  SECTION("difference of the two most recent seeker scores") {
    CHECK(turn_emotion_delta(conv, 3, scorer) == Catch::Approx(0.25));
  }
  SECTION("fewer than two prior seeker utterances gives zero") {
    CHECK(turn_emotion_delta(conv, 1, scorer) == 0.0);
  }
  SECTION("supporter utterances between seekers are skipped") {
    auto c2 = make_conv({{Speaker::seeker, "a"},
                         {Speaker::supporter, "x"},
                         {Speaker::supporter, "x"},
                         {Speaker::seeker, "b"},
                         {Speaker::supporter, "x"}});
    CHECK(turn_emotion_delta(c2, 4, scorer) == Catch::Approx(0.25));
  }
  SECTION("target must be a supporter utterance") {
    CHECK_THROWS_AS(turn_emotion_delta(conv, 2, scorer), std::invalid_argument);
    CHECK_THROWS_AS(turn_emotion_delta(conv, 9, scorer), std::out_of_range);
  }
}

TEST_CASE("turn rating delta") {
  SECTION("ratings 3 then 5") {
    auto conv = make_conv({{Speaker::seeker, "a", 3},
                           {Speaker::supporter, "x"},
                           {Speaker::seeker, "b", 5},
                           {Speaker::supporter, "x"}});
    CHECK(turn_rating_delta(conv, 3) == Catch::Approx(0.5));
  }
  SECTION("ratings 5 then 2") {
    auto conv = make_conv({{Speaker::seeker, "a", 5},
                           {Speaker::supporter, "x"},
                           {Speaker::seeker, "b", 2},
                           {Speaker::supporter, "x"}});
    CHECK(turn_rating_delta(conv, 3) == Catch::Approx(-0.75));
  }
  SECTION("fewer than two ratings gives zero") {
    auto conv = make_conv({{Speaker::seeker, "a", 4},
                           {Speaker::supporter, "x"},
                           {Speaker::seeker, "b"},
                           {Speaker::supporter, "x"}});
    CHECK(turn_rating_delta(conv, 1) == 0.0);
    CHECK(turn_rating_delta(conv, 3) == 0.0);
  }
  SECTION("unrated seeker utterances in between are skipped") {
    auto conv = make_conv({{Speaker::seeker, "a", 2},
                           {Speaker::supporter, "x"},
                           {Speaker::seeker, "b"},
                           {Speaker::seeker, "c", 4},
                           {Speaker::supporter, "x"}});
    CHECK(turn_rating_delta(conv, 4) == Catch::Approx(0.5));
  }
  SECTION("shift by a constant cancels") {
    for (int prev = 1; prev <= 5; ++prev)
      for (int last = 1; last <= 5; ++last)
        for (int shift = -2; shift <= 2; ++shift) {
          int p = prev + shift, l = last + shift;
          if (p < 1 || p > 5 || l < 1 || l > 5) continue;
          auto base = make_conv({{Speaker::seeker, "a", prev},
                                 {Speaker::supporter, "x"},
                                 {Speaker::seeker, "b", last},
                                 {Speaker::supporter, "x"}});
          auto shifted = make_conv({{Speaker::seeker, "a", p},
                                    {Speaker::supporter, "x"},
                                    {Speaker::seeker, "b", l},
                                    {Speaker::supporter, "x"}});
          REQUIRE(turn_rating_delta(base, 3) == Catch::Approx(turn_rating_delta(shifted, 3)));
        }
  }
}

TEST_CASE("conversation delta") {
  SurveyMeans neutral;

  SECTION("stress 4 to 2, relevance 5, empathy 4") {
    SurveyScores s{4, 2, 5, 4};
    CHECK(conversation_delta(s, neutral) == Catch::Approx(2.0));
  }
  SECTION("all neutral gives zero") {
    SurveyScores s{3, 3, 3, 3};
    CHECK(conversation_delta(s, neutral) == Catch::Approx(0.0));
  }
  SECTION("missing empathy uses the training mean") {
    std::vector<Conversation> split;
    for (int e : {5, 4, 4, 4, 4}) {
      Conversation c;
      c.survey = SurveyScores{3, 3, 3, e};
      split.push_back(c);
    }
    SurveyMeans m = compute_survey_means(split);
    CHECK(m.empathy == Catch::Approx(4.2));
    SurveyScores s{3, 3, 3, -1};
    CHECK(conversation_delta(s, m) == Catch::Approx(0.6));
  }
  SECTION("complete surveys never consult the means") {
    double nan = std::numeric_limits<double>::quiet_NaN();
    SurveyMeans poison{nan, nan, nan, nan};
    SurveyScores s{4, 2, 5, 4};
    double got = conversation_delta(s, poison);
    CHECK(std::isfinite(got));
    CHECK(got == Catch::Approx(conversation_delta(s, neutral)));
  }
  SECTION("literal sum mode") {
    SurveyScores s{4, 2, 5, 4};
    CHECK(conversation_delta(s, neutral, ConvDeltaMode::literal_sum) == Catch::Approx(11.0));
    SurveyScores missing{3, -1, 5, 4};
    SurveyMeans m;
    m.stress_post = 2.5;
    CHECK(conversation_delta(missing, m, ConvDeltaMode::literal_sum) == Catch::Approx(11.5));
  }
}

TEST_CASE("feedback score") {
  CHECK(feedback_score(0.25, 0.5, 2.0, 0.5) == Catch::Approx(1.75));
  CHECK(feedback_score(0.0, 0.0, 0.0, 0.5) == 0.0);
  double inf = std::numeric_limits<double>::infinity();
  double nan = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(feedback_score(inf, 0, 0, 0.5), std::invalid_argument);
  CHECK_THROWS_AS(feedback_score(0, nan, 0, 0.5), std::invalid_argument);
  CHECK_THROWS_AS(feedback_score(0, 0, -inf, 0.5), std::invalid_argument);

  SECTION("monotone in every component for positive mu") {
    Rng rng(11);
    for (int i = 0; i < 200; ++i) {
      double de = rng.uniform(-1, 1), dr = rng.uniform(-1, 1), dc = rng.uniform(-3, 3);
      double mu = rng.uniform(0.05, 2.0);
      double eps = rng.uniform(1e-6, 0.5);
      double base = feedback_score(de, dr, dc, mu);
      REQUIRE(feedback_score(de + eps, dr, dc, mu) > base);
      REQUIRE(feedback_score(de, dr + eps, dc, mu) > base);
      REQUIRE(feedback_score(de, dr, dc + eps, mu) > base);
    }
  }
}

TEST_CASE("survey means over the sample corpus") {
  auto result = load_corpus(fixture("sample_esconv.json"));
  SurveyMeans m = compute_survey_means(result.conversations);
  CHECK(m.stress_pre == Catch::Approx(4.0));
  CHECK(m.stress_post == Catch::Approx(3.0));
  CHECK(m.relevance == Catch::Approx(3.5));
  CHECK(m.empathy == Catch::Approx(5.0));

  std::vector<Conversation> empty_surveys(2);
  SurveyMeans fallback = compute_survey_means(empty_surveys);
  CHECK(fallback.stress_pre == Catch::Approx(3.0));
  CHECK(fallback.empathy == Catch::Approx(3.0));
}

TEST_CASE("feedback on the sample corpus with the lexicon scorer") {
  auto result = load_corpus(fixture("sample_esconv.json"));
  std::vector<std::string> texts;
  for (const auto& c : result.conversations)
    for (const auto& u : c.utterances) texts.push_back(u.text);
  Vocab vocab = Vocab::build(texts);
  LexiconEmotionScorer scorer(vocab, 8, 3);
  const Conversation& alpha = result.conversations[0];

  double expected =
      scorer.positive_score(alpha.utterances[2].text) - scorer.positive_score(alpha.utterances[0].text);
  CHECK(turn_emotion_delta(alpha, 3, scorer) == Catch::Approx(expected));
  CHECK(turn_emotion_delta(alpha, 1, scorer) == 0.0);

  SurveyMeans means = compute_survey_means(result.conversations);
  FeedbackSignals f = compute_feedback(alpha, 3, scorer, means);
  CHECK(f.mu == Catch::Approx(0.5));
  CHECK(f.delta_e == Catch::Approx(expected));
  CHECK(f.delta_r == Catch::Approx(0.0));  // single rating before index 3
  CHECK(f.delta_c == Catch::Approx(0.75 + 0.5 + 1.0));
  CHECK(f.delta_s == Catch::Approx(f.delta_e + f.delta_r + f.mu * f.delta_c));

  FeedbackSignals g = compute_feedback(alpha, 5, scorer, means);
  CHECK(g.delta_r == Catch::Approx(0.25));  // ratings 4 then 5
}

TEST_CASE("lexicon emotion scorer") {
  std::vector<std::string> texts = {"i am happy and hopeful today",
                                    "i feel sad and anxious and scared",
                                    "this is great , thanks for the support",
                                    "everything is terrible and i am stressed"};
  Vocab vocab = Vocab::build(texts);
  LexiconEmotionScorer scorer(vocab, 6, 42);

  SECTION("polar words separate") {
    CHECK(scorer.positive_score("happy") > 0.9);
    CHECK(scorer.positive_score("sad") < 0.1);
    CHECK(scorer.positive_score("i am happy") > scorer.positive_score("i am sad"));
  }
  SECTION("scores stay in the unit interval") {
    for (const auto& t : texts) {
      double s = scorer.positive_score(t);
      CHECK(s >= 0.0);
      CHECK(s <= 1.0);
    }
    CHECK(scorer.positive_score("") >= 0.0);
    CHECK(scorer.positive_score("") <= 1.0);
  }
  SECTION("layout encoding has one row per position") {
    auto layout = build_context_layout({vocab.encode("i am happy"), vocab.encode("sad")});
    Mat e = scorer.encode_layout(layout);
    CHECK(e.rows == layout.length());
    CHECK(e.cols == scorer.dim());
    CHECK(all_finite(e));
  }
  SECTION("same seed reproduces the encoder bitwise") {
    LexiconEmotionScorer again(vocab, 6, 42);
    auto layout = build_context_layout({vocab.encode("this is great")});
    CHECK(max_abs_diff(scorer.encode_layout(layout), again.encode_layout(layout)) == 0.0);
  }
}

TEST_CASE("emotion scorer registry") {
  Vocab vocab = Vocab::build({"happy sad fine"});
  auto lex = make_emotion_scorer("lexicon", vocab, 4, 1);
  CHECK(lex->name() == "lexicon");
  CHECK(lex->dim() == 4);
  auto con = make_emotion_scorer("constant", vocab, 4, 1);
  CHECK(con->name() == "constant");
  CHECK(con->positive_score("anything") == Catch::Approx(0.5));
  auto layout = build_context_layout({vocab.encode("happy")});
  CHECK(max_abs_diff(con->encode_layout(layout), Mat(layout.length(), 4)) == 0.0);
  CHECK_THROWS_AS(make_emotion_scorer("external", vocab, 4, 1), std::invalid_argument);
}
