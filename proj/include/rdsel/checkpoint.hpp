#pragma once

#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>
#include <string>

#include "rdsel/errors.hpp"
#include "rdsel/trainer.hpp"

namespace rdsel {

// Plain-text checkpoint, bit-exact by construction: every double is
// written as the hex of its IEEE-754 bit pattern. Layout:
//
//   rdsel-checkpoint v1
//   path <L> <id...>
//   net <name> <output-activation> dims <k> <d0> ... <d(k-1)>
//   W<l> <hex...>        (row-major, dims[l] * dims[l+1] values)
//   b<l> <hex...>
//   ...
//   end
//
// Nets appear in a fixed order; the loader is strict about it.

namespace detail {

inline std::string to_hex(double v) {
  std::uint64_t bits;
  std::memcpy(&bits, &v, sizeof(bits));
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(bits));
  return buf;
}

inline double from_hex(const std::string& s) {
  if (s.size() != 16) throw ParseError("checkpoint: bad hex value '" + s + "'");
  std::uint64_t bits = 0;
  for (char c : s) {
    bits <<= 4;
    if (c >= '0' && c <= '9')
      bits |= static_cast<std::uint64_t>(c - '0');
    else if (c >= 'a' && c <= 'f')
      bits |= static_cast<std::uint64_t>(c - 'a' + 10);
    else
      throw ParseError("checkpoint: bad hex value '" + s + "'");
  }
  double v;
  std::memcpy(&v, &bits, sizeof(v));
  return v;
}

inline const char* activation_name(Activation a) {
  switch (a) {
    case Activation::identity: return "identity";
    case Activation::sigmoid: return "sigmoid";
    case Activation::softmax: return "softmax";
  }
  return "?";
}

inline Activation parse_activation(const std::string& s) {
  if (s == "identity") return Activation::identity;
  if (s == "sigmoid") return Activation::sigmoid;
  if (s == "softmax") return Activation::softmax;
  throw ParseError("checkpoint: unknown activation '" + s + "'");
}

inline void write_net(std::ostream& out, const std::string& name, const MlpNetwork& net) {
  out << "net " << name << " " << activation_name(net.output) << " dims " << net.layer_dims.size();
  for (std::size_t d : net.layer_dims) out << " " << d;
  out << "\n";
  for (std::size_t l = 0; l < net.n_layers(); ++l) {
    out << "W" << l;
    for (double v : net.weights[l].data) out << " " << to_hex(v);
    out << "\nb" << l;
    for (double v : net.biases[l].data) out << " " << to_hex(v);
    out << "\n";
  }
}

inline MlpNetwork read_net(std::istream& in, const std::string& expected_name) {
  std::string line;
  if (!std::getline(in, line)) throw ParseError("checkpoint: missing net " + expected_name);
  std::istringstream head(line);
  std::string tag, name, act, dims_tag;
  std::size_t k = 0;
  head >> tag >> name >> act >> dims_tag >> k;
  if (tag != "net" || name != expected_name || dims_tag != "dims" || k < 2)
    throw ParseError("checkpoint: expected 'net " + expected_name + "', got '" + line + "'");
  MlpNetwork net;
  net.output = parse_activation(act);
  net.layer_dims.resize(k);
  for (std::size_t i = 0; i < k; ++i)
    if (!(head >> net.layer_dims[i])) throw ParseError("checkpoint: truncated dims for " + name);
  for (std::size_t l = 0; l + 1 < k; ++l) {
    auto read_block = [&](const std::string& prefix, std::size_t count) {
      if (!std::getline(in, line))
        throw ParseError("checkpoint: truncated parameters for " + name);
      std::istringstream row(line);
      std::string got;
      row >> got;
      if (got != prefix + std::to_string(l))
        throw ParseError("checkpoint: expected " + prefix + std::to_string(l) + " in " + name);
      std::vector<double> values(count);
      std::string hex;
      for (std::size_t i = 0; i < count; ++i) {
        if (!(row >> hex)) throw ParseError("checkpoint: truncated values in " + name);
        values[i] = from_hex(hex);
      }
      return values;
    };
    Matrix w(net.layer_dims[l], net.layer_dims[l + 1]);
    w.data = read_block("W", w.data.size());
    net.weights.push_back(std::move(w));
    Matrix b(1, net.layer_dims[l + 1]);
    b.data = read_block("b", b.data.size());
    net.biases.push_back(std::move(b));
  }
  return net;
}

}  // namespace detail

inline void save_checkpoint(const std::string& path, const TrainedModel& trained) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("save_checkpoint: cannot open " + path);
  out << "rdsel-checkpoint v1\n";
  out << "path " << trained.path.ids.size();
  for (int id : trained.path.ids) out << " " << id;
  out << "\n";
  detail::write_net(out, "feature", trained.model.feature);
  detail::write_net(out, "invariant", trained.model.invariant);
  detail::write_net(out, "specific", trained.model.specific);
  detail::write_net(out, "classifier", trained.model.classifier);
  detail::write_net(out, "policy", trained.policy);
  for (std::size_t k = 0; k < 3; ++k)
    detail::write_net(out, "mine_invariant_" + std::to_string(k), trained.model.mine_invariant[k]);
  for (std::size_t k = 0; k < 3; ++k)
    detail::write_net(out, "mine_specific_" + std::to_string(k), trained.model.mine_specific[k]);
  out << "end\n";
  if (!out) throw IoError("save_checkpoint: write failure on " + path);
}

inline TrainedModel load_checkpoint(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("load_checkpoint: cannot open " + path);
  std::string line;
  if (!std::getline(in, line) || line != "rdsel-checkpoint v1")
    throw ParseError("load_checkpoint: bad header in " + path);
  TrainedModel trained;
  if (!std::getline(in, line)) throw ParseError("load_checkpoint: missing path line");
  {
    std::istringstream head(line);
    std::string tag;
    std::size_t count = 0;
    head >> tag >> count;
    if (tag != "path") throw ParseError("load_checkpoint: expected path line");
    trained.path.ids.resize(count);
    for (std::size_t i = 0; i < count; ++i)
      if (!(head >> trained.path.ids[i]))
        throw ParseError("load_checkpoint: truncated path line");
  }
  trained.model.feature = detail::read_net(in, "feature");
  trained.model.invariant = detail::read_net(in, "invariant");
  trained.model.specific = detail::read_net(in, "specific");
  trained.model.classifier = detail::read_net(in, "classifier");
  trained.policy = detail::read_net(in, "policy");
  for (std::size_t k = 0; k < 3; ++k)
    trained.model.mine_invariant[k] = detail::read_net(in, "mine_invariant_" + std::to_string(k));
  for (std::size_t k = 0; k < 3; ++k)
    trained.model.mine_specific[k] = detail::read_net(in, "mine_specific_" + std::to_string(k));
  if (!std::getline(in, line) || line != "end")
    throw ParseError("load_checkpoint: missing end marker");
  return trained;
}

}  // namespace rdsel
