#include "edithumor/checkpoint.hpp"

#include <zlib.h>

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>
#include <map>
#include <sstream>

#include "edithumor/error.hpp"

namespace edithumor {

namespace {

void put_u32(std::vector<char>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFFu));
}

void put_u64(std::vector<char>& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFFu));
}

std::uint32_t crc_of(const char* data, std::size_t n) {
  return static_cast<std::uint32_t>(
      crc32(0L, reinterpret_cast<const Bytef*>(data), static_cast<uInt>(n)));
}

class Reader {
 public:
  Reader(const std::vector<char>& bytes, std::size_t end) : bytes_(bytes), end_(end) {}

  std::size_t pos() const { return pos_; }
  bool done() const { return pos_ == end_; }

  std::uint64_t uint(int width) {
    need(static_cast<std::size_t>(width));
    std::uint64_t v = 0;
    for (int i = width - 1; i >= 0; --i) {
      v = (v << 8) | static_cast<unsigned char>(bytes_[pos_ + static_cast<std::size_t>(i)]);
    }
    pos_ += static_cast<std::size_t>(width);
    return v;
  }
  std::string str(std::size_t n) {
    need(n);
    std::string s(bytes_.data() + pos_, n);
    pos_ += n;
    return s;
  }

 private:
  void need(std::size_t n) const {
    if (end_ - pos_ < n) throw CorruptFile("checkpoint: record runs past end of data");
  }
  const std::vector<char>& bytes_;
  std::size_t end_;
  std::size_t pos_ = 0;
};

CheckpointRecord scalar(std::string name, double v) {
  return {std::move(name), {}, {static_cast<float>(v)}};
}

CheckpointRecord words(std::string name, const std::vector<std::uint32_t>& w) {
  CheckpointRecord r{"u32:" + std::move(name), {w.size()}, {}};
  for (const auto x : w) r.data.push_back(std::bit_cast<float>(x));
  return r;
}

std::vector<std::uint32_t> split_u64(std::uint64_t v) {
  return {static_cast<std::uint32_t>(v & 0xFFFFFFFFu), static_cast<std::uint32_t>(v >> 32)};
}

// Doubles keep their exact bit pattern as two u32 words.
CheckpointRecord real(std::string name, double v) {
  return words(std::move(name), split_u64(std::bit_cast<std::uint64_t>(v)));
}

CheckpointRecord tensor(std::string name, std::span<const float> values,
                        const std::vector<std::size_t>& shape) {
  CheckpointRecord r{std::move(name), {}, {values.begin(), values.end()}};
  for (const auto d : shape) r.dims.push_back(d);
  return r;
}

}  // namespace

std::vector<char> encode_records(const std::vector<CheckpointRecord>& records,
                                 std::uint32_t version) {
  std::vector<char> out(std::begin(kCheckpointMagic), std::end(kCheckpointMagic));
  put_u32(out, version);
  for (const auto& r : records) {
    std::uint64_t count = 1;
    for (const auto d : r.dims) count *= d;
    if (count != r.data.size()) {
      throw ShapeMismatch("checkpoint record " + r.name + ": dims disagree with payload");
    }
    put_u32(out, static_cast<std::uint32_t>(r.name.size()));
    out.insert(out.end(), r.name.begin(), r.name.end());
    out.push_back(static_cast<char>(r.dims.size()));
    for (const auto d : r.dims) put_u64(out, d);
    for (const float v : r.data) put_u32(out, std::bit_cast<std::uint32_t>(v));
  }
  put_u32(out, crc_of(out.data(), out.size()));
  return out;
}

std::vector<CheckpointRecord> decode_records(const std::vector<char>& bytes) {
  if (bytes.size() < 12 || std::memcmp(bytes.data(), kCheckpointMagic, 4) != 0) {
    throw CorruptFile("checkpoint: missing KDEH header");
  }
  Reader header(bytes, bytes.size());
  (void)header.str(4);
  const auto version = static_cast<std::uint32_t>(header.uint(4));
  if (version != kCheckpointVersion) {
    throw VersionMismatch("checkpoint: version " + std::to_string(version) + ", expected " +
                          std::to_string(kCheckpointVersion));
  }
  const std::size_t body_end = bytes.size() - 4;
  Reader crc_reader(bytes, bytes.size());
  (void)crc_reader.str(body_end);
  const auto stored = static_cast<std::uint32_t>(crc_reader.uint(4));
  if (stored != crc_of(bytes.data(), body_end)) throw CorruptFile("checkpoint: CRC mismatch");

  Reader in(bytes, body_end);
  (void)in.str(8);
  std::vector<CheckpointRecord> records;
  while (!in.done()) {
    CheckpointRecord r;
    const auto name_len = in.uint(4);
    r.name = in.str(static_cast<std::size_t>(name_len));
    const auto rank = in.uint(1);
    std::uint64_t count = 1;
    for (std::uint64_t i = 0; i < rank; ++i) {
      r.dims.push_back(in.uint(8));
      count *= r.dims.back();
    }
    if (count > (body_end - in.pos()) / 4) throw CorruptFile("checkpoint: payload past end");
    r.data.reserve(static_cast<std::size_t>(count));
    for (std::uint64_t i = 0; i < count; ++i) {
      r.data.push_back(std::bit_cast<float>(static_cast<std::uint32_t>(in.uint(4))));
    }
    records.push_back(std::move(r));
  }
  return records;
}

std::vector<CheckpointRecord> state_to_records(const TrainState& s) {
  const auto& c = s.config;
  std::vector<CheckpointRecord> r;
  r.push_back(scalar("config.epochs", c.epochs));
  r.push_back(scalar("config.batch_size", c.batch_size));
  r.push_back(real("config.learning_rate", c.learning_rate));
  r.push_back(real("config.rho", c.rho));
  r.push_back(real("config.eps", c.eps));
  r.push_back(scalar("config.seq_len", c.seq_len));
  r.push_back(scalar("config.hidden", c.hidden));
  r.push_back(scalar("config.embed_dim", c.embed_dim));
  r.push_back(words("config.seed", split_u64(c.seed)));
  r.push_back(scalar("config.shuffle", c.shuffle ? 1 : 0));
  r.push_back(scalar("config.clamp_eval", c.clamp_eval ? 1 : 0));
  r.push_back(scalar("config.summary", c.summary == SummaryMode::kMean ? 1 : 0));
  r.push_back(scalar("config.output_relu", c.output_relu ? 1 : 0));
  r.push_back(real("config.clip_norm", c.clip_norm));
  r.push_back(real("config.bn_epsilon", c.bn_epsilon));
  r.push_back(real("config.bn_momentum", c.bn_momentum));
  r.push_back(scalar("config.vocab_size", static_cast<double>(s.model.vocab_size)));

  const auto views = trainable_views<const float>(s.params);
  for (const auto& v : views) r.push_back(tensor("param." + v.name, v.values, v.shape));
  const auto& bn = s.params.bn;
  r.push_back(tensor("buffer.bn.running_mean", bn.running_mean, {bn.running_mean.size()}));
  r.push_back(tensor("buffer.bn.running_var", bn.running_var, {bn.running_var.size()}));
  for (std::size_t k = 0; k < views.size(); ++k) {
    r.push_back(tensor("rmsprop." + views[k].name, s.optimizer.accum[k], views[k].shape));
  }

  std::ostringstream rng_text;
  rng_text << s.rng;
  std::istringstream rng_in(rng_text.str());
  std::vector<std::uint32_t> rng_words;
  std::uint64_t w = 0;
  while (rng_in >> w) {
    const auto halves = split_u64(w);
    rng_words.insert(rng_words.end(), halves.begin(), halves.end());
  }
  r.push_back(words("rng.state", rng_words));
  r.push_back(scalar("train.epoch", s.epoch));
  return r;
}

TrainState state_from_records(const std::vector<CheckpointRecord>& records) {
  std::map<std::string, const CheckpointRecord*> by_name;
  for (const auto& r : records) by_name[r.name] = &r;
  auto get = [&](const std::string& name) -> const CheckpointRecord& {
    const auto it = by_name.find(name);
    if (it == by_name.end()) throw CorruptFile("checkpoint: missing record " + name);
    return *it->second;
  };
  auto num = [&](const std::string& name) {
    const auto& r = get(name);
    if (r.data.size() != 1) throw CorruptFile("checkpoint: " + name + " is not a scalar");
    return static_cast<double>(r.data[0]);
  };
  auto u32s = [&](const std::string& name) {
    std::vector<std::uint32_t> out;
    for (const float f : get("u32:" + name).data) out.push_back(std::bit_cast<std::uint32_t>(f));
    return out;
  };

  auto dbl = [&](const std::string& name) {
    const auto w = u32s(name);
    if (w.size() != 2) throw CorruptFile("checkpoint: bad record u32:" + name);
    return std::bit_cast<double>((static_cast<std::uint64_t>(w[1]) << 32) | w[0]);
  };

  TrainState s;
  auto& c = s.config;
  c.epochs = static_cast<int>(num("config.epochs"));
  c.batch_size = static_cast<int>(num("config.batch_size"));
  c.learning_rate = dbl("config.learning_rate");
  c.rho = dbl("config.rho");
  c.eps = dbl("config.eps");
  c.seq_len = static_cast<int>(num("config.seq_len"));
  c.hidden = static_cast<int>(num("config.hidden"));
  c.embed_dim = static_cast<int>(num("config.embed_dim"));
  const auto seed = u32s("config.seed");
  if (seed.size() != 2) throw CorruptFile("checkpoint: bad seed record");
  c.seed = (static_cast<std::uint64_t>(seed[1]) << 32) | seed[0];
  c.shuffle = num("config.shuffle") != 0.0;
  c.clamp_eval = num("config.clamp_eval") != 0.0;
  c.summary = num("config.summary") != 0.0 ? SummaryMode::kMean : SummaryMode::kLast;
  c.output_relu = num("config.output_relu") != 0.0;
  c.clip_norm = dbl("config.clip_norm");
  c.bn_epsilon = dbl("config.bn_epsilon");
  c.bn_momentum = dbl("config.bn_momentum");
  const auto vocab_size = static_cast<std::size_t>(num("config.vocab_size"));
  s.model = c.model(vocab_size);

  // Shape the containers, then copy payloads in.
  Rng scratch(0);
  s.params = init_params<float>(s.model, Matrix<float>(vocab_size, s.model.embed_dim), scratch);
  s.optimizer = RmspropState<float>(s.params);
  const auto views = trainable_views<float>(s.params);
  auto fill = [&](const std::string& name, std::span<float> dst, const std::vector<std::size_t>& shape) {
    const auto& r = get(name);
    std::vector<std::uint64_t> dims(shape.begin(), shape.end());
    if (r.dims != dims || r.data.size() != dst.size()) {
      throw DimMismatch("checkpoint: " + name + " has a shape inconsistent with its config");
    }
    std::copy(r.data.begin(), r.data.end(), dst.begin());
  };
  for (std::size_t k = 0; k < views.size(); ++k) {
    fill("param." + views[k].name, views[k].values, views[k].shape);
    fill("rmsprop." + views[k].name, s.optimizer.accum[k], views[k].shape);
  }
  auto& bn = s.params.bn;
  fill("buffer.bn.running_mean", bn.running_mean, {bn.running_mean.size()});
  fill("buffer.bn.running_var", bn.running_var, {bn.running_var.size()});

  const auto rw = u32s("rng.state");
  if (rw.size() % 2 != 0) throw CorruptFile("checkpoint: bad rng record");
  std::ostringstream rng_text;
  for (std::size_t i = 0; i < rw.size(); i += 2) {
    if (i) rng_text << ' ';
    rng_text << ((static_cast<std::uint64_t>(rw[i + 1]) << 32) | rw[i]);
  }
  std::istringstream rng_in(rng_text.str());
  rng_in >> s.rng;
  if (!rng_in) throw CorruptFile("checkpoint: unreadable rng state");
  s.epoch = static_cast<int>(num("train.epoch"));
  return s;
}

void save_checkpoint(const TrainState& state, const std::filesystem::path& path) {
  const auto bytes = encode_records(state_to_records(state));
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write checkpoint " + path.string());
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("failed writing checkpoint " + path.string());
}

TrainState load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open checkpoint " + path.string());
  const std::vector<char> bytes{std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
  return state_from_records(decode_records(bytes));
}

}  // namespace edithumor
