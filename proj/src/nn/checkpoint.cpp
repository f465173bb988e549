#include "apo/nn/checkpoint.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

#include "apo/common/error.hpp"

namespace apo::nn {

namespace {

constexpr const char* kMagic = "apo-checkpoint";
constexpr int kVersion = 1;

double parse_real(const std::string& tok) {
  double x = 0.0;
  auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), x);
  if (ec != std::errc() || ptr != tok.data() + tok.size())
    throw RejectedInput("checkpoint: bad real '" + tok + "'");
  return x;
}

std::size_t parse_count(std::istream& in, const char* what) {
  long long n = -1;
  if (!(in >> n) || n < 0) throw RejectedInput(std::string("checkpoint: bad ") + what);
  return static_cast<std::size_t>(n);
}

std::string expect_word(std::istream& in, const char* what) {
  std::string w;
  if (!(in >> w)) throw RejectedInput(std::string("checkpoint: missing ") + what);
  return w;
}

void read_reals(std::istream& in, std::span<double> out) {
  std::string tok;
  for (double& x : out) {
    if (!(in >> tok)) throw RejectedInput("checkpoint: truncated value list");
    x = parse_real(tok);
  }
}

}  // namespace

std::string format_real(double x) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), x);
  return std::string(buf, ptr);
}

std::string Checkpoint::serialize() const {
  std::ostringstream out;
  out << kMagic << ' ' << kVersion << '\n';
  for (const auto& [k, v] : meta) out << "meta " << k << ' ' << v << '\n';
  for (const auto& [name, net] : nets) {
    out << "net " << name << ' ' << net.layer_sizes().size();
    for (std::size_t s : net.layer_sizes()) out << ' ' << s;
    out << "\nactivations";
    for (Activation a : net.activations()) out << ' ' << to_string(a);
    out << '\n';
    auto params = net.parameters();
    for (std::size_t i = 0; i < net.num_layers(); ++i) {
      const LayerShape& l = net.layer(i);
      out << "layer " << i << ' ' << l.rows << ' ' << l.cols;
      for (std::size_t k = l.weight_offset; k < l.end(); ++k) out << ' ' << format_real(params[k]);
      out << '\n';
    }
  }
  for (const auto& [name, vec] : vectors) {
    out << "vector " << name << ' ' << vec.size();
    for (double x : vec) out << ' ' << format_real(x);
    out << '\n';
  }
  out << "end\n";
  return out.str();
}

Checkpoint Checkpoint::parse(const std::string& text) {
  std::istringstream in(text);
  std::string magic;
  int version = 0;
  if (!(in >> magic >> version) || magic != kMagic)
    throw RejectedInput("checkpoint: missing header");
  if (version != kVersion)
    throw RejectedInput("checkpoint: unsupported version " + std::to_string(version));

  Checkpoint ck;
  std::string kw;
  bool ended = false;
  while (in >> kw) {
    if (kw == "end") {
      ended = true;
      break;
    }
    if (kw == "meta") {
      std::string key = expect_word(in, "meta key");
      std::string value;
      std::getline(in, value);
      if (!value.empty() && value.front() == ' ') value.erase(0, 1);
      ck.meta[key] = value;
    } else if (kw == "net") {
      std::string name = expect_word(in, "net name");
      const std::size_t n = parse_count(in, "size count");
      std::vector<std::size_t> sizes(n);
      for (auto& s : sizes) s = parse_count(in, "layer size");
      if (expect_word(in, "activations") != "activations")
        throw RejectedInput("checkpoint: expected activations line");
      if (n < 2) throw RejectedInput("checkpoint: net needs at least two sizes");
      std::vector<Activation> acts(n - 1);
      for (auto& a : acts) a = activation_from_string(expect_word(in, "activation"));
      MlpNet net;
      try {
        net = MlpNet(sizes, acts);
      } catch (const ContractViolation& e) {
        throw RejectedInput(std::string("checkpoint: ") + e.what());
      }
      auto params = net.mutable_parameters();
      for (std::size_t i = 0; i < net.num_layers(); ++i) {
        if (expect_word(in, "layer") != "layer") throw RejectedInput("checkpoint: expected layer");
        const LayerShape& l = net.layer(i);
        const std::size_t idx = parse_count(in, "layer index");
        const std::size_t rows = parse_count(in, "rows");
        const std::size_t cols = parse_count(in, "cols");
        if (idx != i || rows != l.rows || cols != l.cols)
          throw RejectedInput("checkpoint: layer header disagrees with layer sizes");
        read_reals(in, params.subspan(l.weight_offset, l.end() - l.weight_offset));
      }
      ck.nets.insert_or_assign(name, std::move(net));
    } else if (kw == "vector") {
      std::string name = expect_word(in, "vector name");
      std::vector<double> v(parse_count(in, "vector length"));
      read_reals(in, v);
      ck.vectors[name] = std::move(v);
    } else {
      throw RejectedInput("checkpoint: unknown record '" + kw + "'");
    }
  }
  if (!ended) throw RejectedInput("checkpoint: truncated (no end marker)");
  return ck;
}

void Checkpoint::save(const std::filesystem::path& path) const {
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("checkpoint: cannot open " + tmp.string());
    out << serialize();
    if (!out) throw Error("checkpoint: write failed for " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

Checkpoint Checkpoint::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw RejectedInput("checkpoint: cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse(buf.str());
}

}  // namespace apo::nn
