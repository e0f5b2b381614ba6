#include <gtest/gtest.h>

#include <random>
#include <sstream>

#include "edithumor/corpus.hpp"
#include "edithumor/csv.hpp"
#include "edithumor/error.hpp"
#include "fixtures.hpp"

using namespace edithumor;

TEST(ApplyEdit, ReplacesSpan) {
  EXPECT_EQ(apply_edit("Trump <attacks/> media", "hugs"), "Trump hugs media");
  EXPECT_EQ(apply_edit("<A/> b", "A"), "A b");
  EXPECT_EQ(apply_edit("end <word/>", "x"), "end x");
}

TEST(ApplyEdit, RejectsMalformed) {
  EXPECT_THROW(apply_edit("x <y/> z <w/>", "q"), MalformedEdit);
  EXPECT_THROW(apply_edit("no span here", "q"), MalformedEdit);
  EXPECT_THROW(apply_edit("broken /> then <", "q"), MalformedEdit);
  EXPECT_THROW(apply_edit("x <y/> z", ""), MalformedEdit);
}

TEST(ApplyEdit, LengthPredictable) {
  std::mt19937_64 rng(3);
  const std::string alphabet = "abc XYZ,.'-";
  std::uniform_int_distribution<std::size_t> pick(0, alphabet.size() - 1);
  std::uniform_int_distribution<int> len(0, 12);
  auto word = [&](int n) {
    std::string s;
    for (int i = 0; i < n; ++i) s += alphabet[pick(rng)];
    return s;
  };
  for (int trial = 0; trial < 200; ++trial) {
    const std::string pre = word(len(rng)), inner = word(len(rng)), post = word(len(rng));
    const std::string edit = word(1 + len(rng));
    const std::string original = pre + "<" + inner + "/>" + post;
    const std::string out = apply_edit(original, edit);
    const std::size_t span = inner.size() + 3;
    EXPECT_EQ(out.size(), original.size() - span + edit.size());
    EXPECT_EQ(out, pre + edit + post);
  }
}

TEST(Csv, QuotesFieldsThatNeedIt) {
  EXPECT_EQ(csv_quote("plain"), "plain");
  EXPECT_EQ(csv_quote("a,b"), "\"a,b\"");
  EXPECT_EQ(csv_quote("say \"hi\""), "\"say \"\"hi\"\"\"");
  EXPECT_EQ(csv_quote("two\nlines"), "\"two\nlines\"");
}

TEST(Csv, ParsesQuotedFieldsAndLineNumbers) {
  std::istringstream in(
      "# seed=1\n"
      "id,text\r\n"
      "1,\"comma, inside\"\r\n"
      "\n"
      "2,\"multi\nline\"\n"
      "3,\"\"\"q\"\"\"\n");
  const auto t = read_csv(in);
  ASSERT_EQ(t.header, (std::vector<std::string>{"id", "text"}));
  ASSERT_EQ(t.rows.size(), 3u);
  EXPECT_EQ(t.rows[0][1], "comma, inside");
  EXPECT_EQ(t.rows[1][1], "multi\nline");
  EXPECT_EQ(t.rows[2][1], "\"q\"");
  EXPECT_EQ(t.lines, (std::vector<std::size_t>{3, 5, 7}));
  EXPECT_EQ(t.column("text"), 1u);
  EXPECT_FALSE(t.column("missing").has_value());
}

TEST(Csv, UnterminatedQuoteIsParseError) {
  std::istringstream in("id,text\n1,\"open\n");
  EXPECT_THROW(read_csv(in), ParseError);
}

TEST(Csv, StripsByteOrderMark) {
  std::istringstream in("\xEF\xBB\xBFid,x\n1,2\n");
  EXPECT_EQ(read_csv(in).header[0], "id");
}

TEST(Task1Csv, ParsesRows) {
  std::istringstream in(
      "id,original,edit,grades,meanGrade\n"
      "14530,\"France is 'hunting down its citizens who joined <Isis/>' without trial in Iraq\",twins,10000,0.2\n"
      "13034,\"Pentagon claims 2,000 % increase in Russian trolls after <Syria/> strikes\",bowling,33110,1.6\n");
  const auto recs = read_task1_csv(in);
  ASSERT_EQ(recs.size(), 2u);
  EXPECT_EQ(recs[0].id, "14530");
  EXPECT_EQ(recs[0].edit, "twins");
  EXPECT_EQ(recs[0].grades, "10000");
  EXPECT_DOUBLE_EQ(*recs[0].mean_grade, 0.2);
  EXPECT_EQ(apply_edit(recs[1].original, recs[1].edit),
            "Pentagon claims 2,000 % increase in Russian trolls after bowling strikes");
}

TEST(Task1Csv, EmptyFileWithHeader) {
  std::istringstream in("id,original,edit,grades,meanGrade\n");
  EXPECT_TRUE(read_task1_csv(in).empty());
}

TEST(Task1Csv, MissingColumn) {
  std::istringstream in("id,original,grades,meanGrade\n1,<a/> b,0,0\n");
  EXPECT_THROW(read_task1_csv(in), MissingColumn);
  std::istringstream empty("");
  EXPECT_THROW(read_task1_csv(empty), MissingColumn);
}

TEST(Task1Csv, UnlabeledRowsHaveNoTarget) {
  std::istringstream in("id,original,edit\n7,<a/> b,c\n");
  const auto recs = read_task1_csv(in);
  ASSERT_EQ(recs.size(), 1u);
  EXPECT_FALSE(recs[0].mean_grade.has_value());
}

TEST(Task1Csv, MalformedRowsNameTheLine) {
  auto message = [](const std::string& text) {
    std::istringstream in(text);
    try {
      read_task1_csv(in);
    } catch (const ParseError& e) {
      return std::string(e.what());
    }
    return std::string("no error");
  };
  const std::string header = "id,original,edit,grades,meanGrade\n";
  EXPECT_NE(message(header + "1,<a/> b,c,0,0\n2,no span,c,0,0\n").find("line 3"), std::string::npos);
  EXPECT_NE(message(header + "1,<a/> b,c,0,abc\n").find("line 2"), std::string::npos);
  EXPECT_NE(message(header + "1,<a/> b,c,0,3.5\n").find("outside"), std::string::npos);
  EXPECT_NE(message(header + "1,<a/> b,c\n").find("fields"), std::string::npos);
}

TEST(Task1Csv, RoundTripPreservesFields) {
  const auto recs = fixture::synthetic_records(40, 11);
  std::ostringstream out;
  write_task1_csv(out, recs);
  std::istringstream in(out.str());
  const auto back = read_task1_csv(in);
  ASSERT_EQ(back.size(), recs.size());
  for (std::size_t i = 0; i < recs.size(); ++i) {
    EXPECT_EQ(back[i].id, recs[i].id);
    EXPECT_EQ(back[i].original, recs[i].original);
    EXPECT_EQ(back[i].edit, recs[i].edit);
    EXPECT_EQ(back[i].grades, recs[i].grades);
    EXPECT_EQ(back[i].mean_grade, recs[i].mean_grade);
  }
}

TEST(Task1Csv, LoadFromDisk) {
  fixture::TempDir dir("t1");
  const auto recs = fixture::synthetic_records(5, 2);
  fixture::write_task1(dir / "a.csv", recs);
  EXPECT_EQ(load_task1_csv(dir / "a.csv").size(), 5u);
  EXPECT_FALSE(is_task2_csv(dir / "a.csv"));
  EXPECT_THROW(load_task1_csv(dir / "nope.csv"), IoError);
}

TEST(Task2Csv, SingleLabeledRow) {
  std::istringstream in(
      "id,original1,edit1,grades1,meanGrade1,original2,edit2,grades2,meanGrade2,label\n"
      "10920-9866,\"<Gene/> Cernan, Last Astronaut on the Moon\",Dancer,10000,0.2,"
      "\"Gene Cernan, Last <Astronaut/> on the Moon\",Impregnator,22100,1.0,2\n");
  const auto pairs = read_task2_csv(in);
  ASSERT_EQ(pairs.size(), 1u);
  EXPECT_EQ(pairs[0].label, 2);
  EXPECT_EQ(pairs[0].a.id, "10920");
  EXPECT_EQ(pairs[0].b.id, "9866");
  EXPECT_DOUBLE_EQ(*pairs[0].b.mean_grade, 1.0);
}

TEST(Task2Csv, UnlabeledRowHasNoLabel) {
  std::istringstream in(
      "id,original1,edit1,original2,edit2\n"
      "p1,<a/> b,x,a <b/>,y\n");
  const auto pairs = read_task2_csv(in);
  ASSERT_EQ(pairs.size(), 1u);
  EXPECT_FALSE(pairs[0].label.has_value());
  EXPECT_EQ(pairs[0].a.id, "p1#1");
  EXPECT_EQ(pairs[0].b.id, "p1#2");
}

TEST(Task2Csv, MalformedSideBIsNamed) {
  std::istringstream in(
      "id,original1,edit1,original2,edit2,label\n"
      "p1,<a/> b,x,a b,y,1\n");
  try {
    read_task2_csv(in);
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_NE(std::string(e.what()).find("side b"), std::string::npos) << e.what();
  }
}

TEST(Task2Csv, BadLabel) {
  std::istringstream in(
      "id,original1,edit1,original2,edit2,label\n"
      "p1,<a/> b,x,<a/> b,y,3\n");
  EXPECT_THROW(read_task2_csv(in), ParseError);
}

TEST(Task2Csv, FileDetection) {
  fixture::TempDir dir("t2");
  fixture::write_task2(dir / "pairs.csv", fixture::synthetic_pairs(6, 4));
  EXPECT_TRUE(is_task2_csv(dir / "pairs.csv"));
  const auto pairs = load_task2_csv(dir / "pairs.csv");
  EXPECT_EQ(pairs.size(), 6u);
}

namespace {

Vocab vocab_of(const std::vector<std::string>& words) {
  std::vector<std::vector<std::string>> corpus{words};
  return build_vocab(corpus);
}

}  // namespace

TEST(ToExample, PadsShortHeadlines) {
  RawRecord r{"1", "Trump <attacks/> media", "hugs", "", 1.5};
  const auto v = vocab_of({"trump", "hugs", "media"});
  const auto ex = to_example(r, v, 20);
  EXPECT_EQ(ex.true_length, 3);
  ASSERT_EQ(ex.tokens.size(), 20u);
  EXPECT_EQ(ex.tokens[0], v.lookup("trump"));
  EXPECT_EQ(ex.tokens[1], v.lookup("hugs"));
  for (std::size_t t = 3; t < 20; ++t) EXPECT_EQ(ex.tokens[t], kPadId);
  EXPECT_EQ(ex.target, 1.5);
}

TEST(ToExample, TruncatesLongHeadlines) {
  std::string text = "<w0/>";
  for (int i = 1; i < 25; ++i) text += " w" + std::to_string(i);
  RawRecord r{"2", text, "start", "", std::nullopt};
  const auto ex = to_example(r, Vocab{}, 20);
  EXPECT_EQ(ex.true_length, 20);
  for (const auto id : ex.tokens) EXPECT_EQ(id, kUnkId);
  EXPECT_FALSE(ex.target.has_value());
}

TEST(ToExample, EmptyAfterTokenizeIsReported) {
  std::vector<RawRecord> recs{{"a", "<x/> b", "c", "", 1.0}, {"b", "<x/> ...", "!!", "", 1.0}};
  const auto v = vocab_of({"b", "c"});
  LoadReport report;
  const auto ex = to_examples(recs, v, 4, &report);
  EXPECT_EQ(ex[1].true_length, 0);
  for (const auto id : ex[1].tokens) EXPECT_EQ(id, kPadId);
  EXPECT_EQ(report.records, 2u);
  EXPECT_EQ(report.labeled, 2u);
  EXPECT_EQ(report.empty_after_tokenize, (std::vector<std::string>{"b"}));
}

TEST(ToExample, IdsBelowVocabSize) {
  const auto corpus = fixture::toy_corpus(80, 5, 6);
  for (const auto& ex : corpus.examples) {
    for (const auto id : ex.tokens) {
      EXPECT_GE(id, 0);
      EXPECT_LT(static_cast<std::size_t>(id), corpus.vocab.size());
    }
  }
}
