#include "dreamhone/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>
#include <nlohmann/json.hpp>

namespace dreamhone {

namespace {

using nlohmann::json;

constexpr char kMagic[] = {'D', 'H', 'N', 'E', 'T'};

static_assert(std::endian::native == std::endian::little, "checkpoint I/O assumes little-endian host");

template <typename U>
void put(std::string& out, U v) {
  char buf[sizeof(U)];
  std::memcpy(buf, &v, sizeof(U));
  out.append(buf, sizeof(U));
}

class Reader {
 public:
  explicit Reader(const std::string& bytes) : bytes_(bytes) {}

  template <typename U>
  U get(const char* what) {
    need(sizeof(U), what);
    U v;
    std::memcpy(&v, bytes_.data() + pos_, sizeof(U));
    pos_ += sizeof(U);
    return v;
  }
  std::string take(std::size_t n, const char* what) {
    need(n, what);
    std::string s = bytes_.substr(pos_, n);
    pos_ += n;
    return s;
  }
  void floats(Tensor& t, const char* what) {
    const std::size_t n = t.size() * sizeof(float);
    need(n, what);
    std::memcpy(t.data().data(), bytes_.data() + pos_, n);
    pos_ += n;
  }
  std::size_t pos() const { return pos_; }
  std::size_t remaining() const { return bytes_.size() - pos_; }

 private:
  void need(std::size_t n, const char* what) {
    if (remaining() < n)
      throw FormatError(std::string("truncated checkpoint while reading ") + what, pos_);
  }
  const std::string& bytes_;
  std::size_t pos_ = 0;
};

json layer_header(const LayerSpec& l) {
  json j;
  j["name"] = l.name;
  j["kind"] = layer_kind_name(l.kind());
  if (const auto* c = std::get_if<ConvParams>(&l.params)) {
    j["out_channels"] = c->out_channels;
    j["in_channels"] = c->in_channels;
    j["kernel_h"] = c->kernel_h;
    j["kernel_w"] = c->kernel_w;
    j["stride"] = c->stride;
    j["pad"] = c->pad;
  } else if (const auto* p = std::get_if<PoolParams>(&l.params)) {
    j["kernel"] = p->kernel;
    j["stride"] = p->stride;
  } else if (const auto* d = std::get_if<DenseParams>(&l.params)) {
    j["out_features"] = d->out_features();
    j["in_features"] = d->in_features();
  }
  return j;
}

LayerSpec layer_from_header(const json& j) {
  const std::string kind = j.at("kind").get<std::string>();
  LayerSpec l;
  l.name = j.at("name").get<std::string>();
  if (kind == "conv") {
    l.params = ConvParams::make(j.at("out_channels"), j.at("in_channels"), j.at("kernel_h"),
                                j.at("kernel_w"), j.at("stride"), j.at("pad"));
  } else if (kind == "relu") {
    l.params = ReluParams{};
  } else if (kind == "maxpool") {
    l.params = PoolParams{j.at("kernel").get<std::size_t>(), j.at("stride").get<std::size_t>()};
  } else if (kind == "dense") {
    l.params = DenseParams::make(j.at("out_features"), j.at("in_features"));
  } else {
    throw InputError("unknown layer kind '" + kind + "'");
  }
  return l;
}

}  // namespace

std::string serialize_network(const Network& net) {
  json header;
  header["input_dims"] = net.input_dims();
  header["layers"] = json::array();
  for (const auto& l : net.layers()) header["layers"].push_back(layer_header(l));
  header["training_meta"] = {{"corpus_id", net.meta().corpus_id},
                             {"epochs_run", net.meta().epochs_run},
                             {"final_accuracy", net.meta().final_accuracy}};
  const std::string text = header.dump();

  std::string out(kMagic, sizeof(kMagic));
  put<std::uint32_t>(out, kCheckpointVersion);
  put<std::uint64_t>(out, text.size());
  out += text;
  auto block = [&](const Tensor& t) {
    out.append(reinterpret_cast<const char*>(t.data().data()), t.size() * sizeof(float));
  };
  for (const auto& l : net.layers()) {
    if (const auto* c = std::get_if<ConvParams>(&l.params)) {
      block(c->weights);
      block(c->bias);
    } else if (const auto* d = std::get_if<DenseParams>(&l.params)) {
      block(d->weights);
      block(d->bias);
    }
  }
  return out;
}

Network deserialize_network(const std::string& bytes) {
  Reader r(bytes);
  const std::string magic = r.take(sizeof(kMagic), "magic");
  if (magic != std::string(kMagic, sizeof(kMagic))) throw FormatError("bad checkpoint magic", 0);
  const auto version = r.get<std::uint32_t>("version");
  if (version != kCheckpointVersion)
    throw VersionError("checkpoint format version " + std::to_string(version) +
                       " is not supported (expected " + std::to_string(kCheckpointVersion) + ")");
  const std::size_t len_offset = r.pos();
  const auto header_len = r.get<std::uint64_t>("header length");
  if (header_len > r.remaining()) throw FormatError("truncated checkpoint header", len_offset);
  const std::size_t header_offset = r.pos();
  const std::string text = r.take(static_cast<std::size_t>(header_len), "header");

  std::vector<LayerSpec> layers;
  Shape input_dims;
  TrainingMeta meta;
  try {
    const json header = json::parse(text);
    input_dims = header.at("input_dims").get<Shape>();
    for (const auto& lj : header.at("layers")) layers.push_back(layer_from_header(lj));
    const auto& m = header.at("training_meta");
    meta.corpus_id = m.at("corpus_id").get<std::string>();
    meta.epochs_run = m.at("epochs_run").get<std::size_t>();
    meta.final_accuracy = m.at("final_accuracy").get<double>();
  } catch (const json::exception& e) {
    throw FormatError(std::string("invalid checkpoint header: ") + e.what(), header_offset);
  } catch (const Error& e) {
    throw FormatError(std::string("invalid checkpoint header: ") + e.what(), header_offset);
  }

  for (auto& l : layers) {
    if (auto* c = std::get_if<ConvParams>(&l.params)) {
      r.floats(c->weights, "conv weights");
      r.floats(c->bias, "conv bias");
    } else if (auto* d = std::get_if<DenseParams>(&l.params)) {
      r.floats(d->weights, "dense weights");
      r.floats(d->bias, "dense bias");
    }
  }
  if (r.remaining() != 0) throw FormatError("trailing bytes after weight blocks", r.pos());
  try {
    return Network(std::move(input_dims), std::move(layers), std::move(meta));
  } catch (const Error& e) {
    throw FormatError(std::string("inconsistent checkpoint: ") + e.what(), header_offset);
  }
}

void save_checkpoint(const Network& net, const std::filesystem::path& path) {
  const std::string bytes = serialize_network(net);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw InputError("cannot write checkpoint '" + path.string() + "'");
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw InputError("failed writing checkpoint '" + path.string() + "'");
}

Network load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot read checkpoint '" + path.string() + "'");
  std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return deserialize_network(bytes);
}

}  // namespace dreamhone
