#include "fixtures.hpp"

#include <fstream>
#include <iterator>
#include <random>
#include <sstream>

#include "edithumor/csv.hpp"
#include "edithumor/embed.hpp"

namespace edithumor::fixture {

namespace fs = std::filesystem;

TempDir::TempDir(const std::string& tag) {
  static int counter = 0;
  std::random_device rd;
  path_ = fs::temp_directory_path() /
          ("edithumor_" + tag + "_" + std::to_string(rd()) + "_" + std::to_string(counter++));
  fs::create_directories(path_);
}

TempDir::~TempDir() {
  std::error_code ec;
  fs::remove_all(path_, ec);
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  out << text;
}

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

namespace {

const std::vector<std::string>& subjects() {
  static const std::vector<std::string> w{"Trump", "Senate", "Congress", "Mayor", "Police",
                                          "Officials", "Court", "Governor", "Voters", "Experts"};
  return w;
}
const std::vector<std::string>& verbs() {
  static const std::vector<std::string> w{"attacks", "praises", "blocks", "rejects", "backs",
                                          "slams", "delays", "approves"};
  return w;
}
const std::vector<std::string>& objects() {
  static const std::vector<std::string> w{"media", "budget", "plan", "bill", "deal", "report",
                                          "tariffs", "wall", "election", "policy"};
  return w;
}
// Edit words with a built-in funniness level.
const std::vector<std::pair<std::string, double>>& edits() {
  static const std::vector<std::pair<std::string, double>> w{
      {"hugs", 2.4},    {"tickles", 2.8}, {"eats", 2.2},  {"kisses", 2.0}, {"ignores", 0.6},
      {"meets", 0.4},   {"pizza", 2.6},   {"cats", 2.1},  {"clowns", 2.7}, {"taxes", 0.3},
      {"budget", 0.2},  {"hamster", 2.5}, {"dance", 1.8}, {"sues", 0.8},   {"nap", 1.5}};
  return w;
}
const std::vector<std::string>& fillers() {
  static const std::vector<std::string> w{"over", "amid", "after", "new", "secret", "big",
                                          "tiny", "again", "today", "finally"};
  return w;
}

}  // namespace

std::vector<RawRecord> synthetic_records(std::size_t n, std::uint64_t seed, bool labeled) {
  std::mt19937_64 rng(seed);
  auto pick = [&](const auto& v) -> const auto& {
    return v[std::uniform_int_distribution<std::size_t>(0, v.size() - 1)(rng)];
  };
  std::normal_distribution<double> noise(0.0, 0.15);
  std::vector<RawRecord> out;
  for (std::size_t i = 0; i < n; ++i) {
    const std::string subject = pick(subjects());
    const std::string verb = pick(verbs());
    const std::string object = pick(objects());
    const auto& edit = pick(edits());
    std::vector<std::string> words{subject, verb, object};
    const int extra = std::uniform_int_distribution<int>(0, 6)(rng);
    for (int k = 0; k < extra; ++k) words.push_back(pick(fillers()));
    // Mark one of the first three words for replacement.
    const std::size_t slot = std::uniform_int_distribution<std::size_t>(0, 2)(rng);
    std::ostringstream headline;
    for (std::size_t k = 0; k < words.size(); ++k) {
      if (k) headline << ' ';
      if (k == slot) {
        headline << '<' << words[k] << "/>";
      } else {
        headline << words[k];
      }
    }
    if (i % 7 == 3) headline << ", officials say";
    RawRecord r;
    r.id = std::to_string(1000 + i);
    r.original = headline.str();
    r.edit = edit.first;
    if (labeled) {
      const double grade = std::clamp(edit.second + 0.1 * static_cast<double>(slot) + noise(rng), 0.0, 3.0);
      // Quantize to the 0.2 grid real mean grades live on.
      r.mean_grade = std::round(grade * 5.0) / 5.0;
      r.grades = "12300";
    }
    out.push_back(std::move(r));
  }
  return out;
}

std::vector<PairRecord> synthetic_pairs(std::size_t n, std::uint64_t seed) {
  const auto a = synthetic_records(n, seed);
  const auto b = synthetic_records(n, seed + 1);
  std::vector<PairRecord> out;
  for (std::size_t i = 0; i < n; ++i) {
    PairRecord p;
    p.a = a[i];
    p.b = b[i];
    p.a.id = a[i].id;
    p.b.id = std::to_string(5000 + i);
    p.id = p.a.id + "-" + p.b.id;
    const double ga = *p.a.mean_grade, gb = *p.b.mean_grade;
    p.label = ga > gb ? 1 : (gb > ga ? 2 : 0);
    out.push_back(std::move(p));
  }
  return out;
}

void write_task1(const fs::path& path, const std::vector<RawRecord>& records) {
  std::ofstream out(path, std::ios::binary);
  write_task1_csv(out, records);
}

void write_task2(const fs::path& path, const std::vector<PairRecord>& pairs) {
  std::ofstream out(path, std::ios::binary);
  write_csv_row(out, {"id", "original1", "edit1", "grades1", "meanGrade1", "original2", "edit2",
                      "grades2", "meanGrade2", "label"});
  for (const auto& p : pairs) {
    auto grade = [](const RawRecord& r) { return r.mean_grade ? format_real(*r.mean_grade) : ""; };
    write_csv_row(out, {p.id, p.a.original, p.a.edit, p.a.grades, grade(p.a), p.b.original,
                        p.b.edit, p.b.grades, grade(p.b),
                        p.label ? std::to_string(*p.label) : std::string{}});
  }
}

void write_synthetic_embeddings(const fs::path& path, std::size_t dim, std::uint64_t seed) {
  std::vector<std::string> words;
  for (const auto& w : subjects()) words.push_back(w);  // capitalized: lowercase fallback
  for (const auto& w : verbs()) words.push_back(w);
  for (const auto& w : objects()) words.push_back(w);
  for (std::size_t i = 0; i < edits().size(); i += 2) words.push_back(edits()[i].first);
  for (std::size_t i = 0; i < fillers().size(); i += 3) words.push_back(fillers()[i]);
  words.push_back("unrelated");
  std::mt19937_64 rng(seed);
  std::normal_distribution<float> dist(0.0f, 0.5f);
  Matrix<float> vecs(words.size(), dim);
  for (auto& v : vecs.span()) v = dist(rng);
  write_word2vec_binary(path, words, vecs, true);
}

ToyCorpus toy_corpus(std::size_t n, std::uint64_t seed, int seq_len) {
  const auto records = synthetic_records(n, seed);
  std::vector<std::vector<std::string>> sentences;
  for (const auto& r : records) sentences.push_back(edited_tokens(r));
  ToyCorpus c;
  c.vocab = build_vocab(sentences);
  c.examples = to_examples(records, c.vocab, seq_len);
  return c;
}

TrainConfig toy_train_config() {
  TrainConfig c;
  c.epochs = 3;
  c.batch_size = 16;
  c.seq_len = 12;
  c.hidden = 8;
  c.embed_dim = 8;
  c.seed = 1234;
  return c;
}

}  // namespace edithumor::fixture
