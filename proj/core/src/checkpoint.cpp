#include "smclust/checkpoint.hpp"

#include <bit>
#include <fstream>
#include <sstream>

static_assert(std::endian::native == std::endian::little,
              "checkpoint I/O assumes a little-endian host");

namespace smclust {

namespace {

constexpr char kMagic[4] = {'S', 'M', 'C', 'K'};
constexpr std::uint8_t kFormatVersion = 1;

void write_u32(std::ostream& out, std::uint32_t v) { out.write(reinterpret_cast<const char*>(&v), sizeof(v)); }
void write_u64(std::ostream& out, std::uint64_t v) { out.write(reinterpret_cast<const char*>(&v), sizeof(v)); }

std::uint32_t read_u32(std::istream& in, const std::string& what) {
  std::uint32_t v = 0;
  in.read(reinterpret_cast<char*>(&v), sizeof(v));
  if (!in) throw data_error("checkpoint: truncated while reading " + what);
  return v;
}

std::uint64_t read_u64(std::istream& in, const std::string& what) {
  std::uint64_t v = 0;
  in.read(reinterpret_cast<char*>(&v), sizeof(v));
  if (!in) throw data_error("checkpoint: truncated while reading " + what);
  return v;
}

void write_string(std::ostream& out, const std::string& s) {
  write_u32(out, static_cast<std::uint32_t>(s.size()));
  out.write(s.data(), static_cast<std::streamsize>(s.size()));
}

std::string read_string(std::istream& in, const std::string& what) {
  const auto len = read_u32(in, what + " length");
  std::string s(len, '\0');
  in.read(s.data(), static_cast<std::streamsize>(len));
  if (!in) throw data_error("checkpoint: truncated while reading " + what);
  return s;
}

void write_matrix(std::ostream& out, const Matrix& m) {
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      const double v = m(i, j);
      out.write(reinterpret_cast<const char*>(&v), sizeof(v));
    }
}

Matrix read_matrix(std::istream& in, Eigen::Index rows, Eigen::Index cols, const std::string& what) {
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index j = 0; j < cols; ++j) {
      double v = 0.0;
      in.read(reinterpret_cast<char*>(&v), sizeof(v));
      if (!in) throw data_error("checkpoint: truncated while reading " + what);
      m(i, j) = v;
    }
  return m;
}

std::uint8_t activation_code(Activation a) {
  switch (a) {
    case Activation::relu: return 0;
    case Activation::tanh_fn: return 1;
    case Activation::identity: return 2;
  }
  return 2;
}

Activation activation_from_code(std::uint8_t c) {
  switch (c) {
    case 0: return Activation::relu;
    case 1: return Activation::tanh_fn;
    case 2: return Activation::identity;
    default: throw data_error("checkpoint: unknown activation code " + std::to_string(c));
  }
}

void write_network(std::ostream& out, const MlpNetwork& net) {
  write_string(out, net.name());
  write_u32(out, static_cast<std::uint32_t>(net.layer_dims().size()));
  for (int d : net.layer_dims()) write_u32(out, static_cast<std::uint32_t>(d));
  for (Activation a : net.activations()) {
    const std::uint8_t code = activation_code(a);
    out.write(reinterpret_cast<const char*>(&code), 1);
  }
  for (std::size_t l = 0; l < net.layer_count(); ++l) {
    write_matrix(out, net.weights()[l]);
    write_matrix(out, net.biases()[l]);
  }
}

MlpNetwork read_network(std::istream& in) {
  const std::string name = read_string(in, "network name");
  const auto dim_count = read_u32(in, name + " dims");
  if (dim_count < 2) throw data_error("checkpoint: network " + name + " has too few layers");
  std::vector<int> dims(dim_count);
  for (auto& d : dims) d = static_cast<int>(read_u32(in, name + " dim"));
  std::vector<Activation> acts(dim_count - 1);
  for (auto& a : acts) {
    std::uint8_t code = 0;
    in.read(reinterpret_cast<char*>(&code), 1);
    if (!in) throw data_error("checkpoint: truncated while reading " + name + " activations");
    a = activation_from_code(code);
  }
  MlpNetwork net(name, dims, acts, 0);
  for (std::size_t l = 0; l < net.layer_count(); ++l) {
    net.weights()[l] = read_matrix(in, dims[l], dims[l + 1], name + " weights");
    net.biases()[l] = read_matrix(in, 1, dims[l + 1], name + " biases");
  }
  return net;
}

}  // namespace

void save_checkpoint(const TrainedModel& model, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw data_error("cannot open " + path.string());
  out.write(kMagic, sizeof(kMagic));
  out.write(reinterpret_cast<const char*>(&kFormatVersion), 1);

  std::ostringstream echo;
  for (const auto& [key, value] : config_to_kv(model.config)) echo << key << " = " << value << '\n';
  const std::string echo_text = echo.str();
  write_u64(out, echo_text.size());
  out.write(echo_text.data(), static_cast<std::streamsize>(echo_text.size()));

  write_u32(out, static_cast<std::uint32_t>(model.encoders.size()));
  for (const auto& net : model.encoders) write_network(out, net);
  for (const auto& net : model.decoders) write_network(out, net);
  write_network(out, model.projector);
  if (!out.good()) throw data_error("write failed for " + path.string());
}

TrainedModel load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw data_error("cannot open " + path.string());
  char magic[4] = {};
  in.read(magic, sizeof(magic));
  if (!in || std::string(magic, 4) != std::string(kMagic, 4))
    throw data_error(path.string() + ": not a checkpoint file");
  std::uint8_t version = 0;
  in.read(reinterpret_cast<char*>(&version), 1);
  if (!in || version != kFormatVersion)
    throw data_error(path.string() + ": unsupported checkpoint format version " + std::to_string(version));

  const auto echo_len = read_u64(in, "config echo length");
  std::string echo(echo_len, '\0');
  in.read(echo.data(), static_cast<std::streamsize>(echo_len));
  if (!in) throw data_error(path.string() + ": truncated config echo");

  TrainedModel model;
  model.config = apply_config_kv(parse_config_text(echo, path.string() + "#config"), TrainConfig{});

  const auto view_count = read_u32(in, "view count");
  for (std::uint32_t v = 0; v < view_count; ++v) model.encoders.push_back(read_network(in));
  for (std::uint32_t v = 0; v < view_count; ++v) model.decoders.push_back(read_network(in));
  model.projector = read_network(in);
  return model;
}

}  // namespace smclust
