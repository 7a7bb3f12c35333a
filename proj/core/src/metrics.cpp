#include "dreamhone/metrics.hpp"

#include <zlib.h>

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <nlohmann/json.hpp>
#include <sstream>

#include "dreamhone/image_io.hpp"

namespace dreamhone {

std::vector<float> encode_flat(const Network& net, const Tensor& image, const std::string& layer_name) {
  return net.forward_to(image, layer_name).activations.values();
}

CorpusEncodings encode_corpus(const Network& net, const std::vector<Tensor>& images,
                              const std::string& layer_name, const std::string& source,
                              std::vector<std::string> ids) {
  if (images.empty()) throw InputError("corpus has no images");
  if (!ids.empty() && ids.size() != images.size()) throw InputError("corpus ids and images differ in count");
  CorpusEncodings out;
  out.layer_name = layer_name;
  out.source = source;
  for (std::size_t i = 0; i < images.size(); ++i)
    out.items.push_back({ids.empty() ? std::to_string(i) : ids[i], encode_flat(net, images[i], layer_name)});
  return out;
}

double euclidean(const std::vector<float>& a, const std::vector<float>& b) {
  if (a.size() != b.size()) throw ShapeError("encoding length mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = static_cast<double>(a[i]) - static_cast<double>(b[i]);
    s += d * d;
  }
  return std::sqrt(s);
}

namespace {

void check_corpus(const CorpusEncodings& corpus, std::size_t length) {
  if (corpus.items.empty()) throw InputError("corpus is empty");
  for (const auto& it : corpus.items)
    if (it.encoding.size() != length)
      throw InputError("corpus encoding length " + std::to_string(it.encoding.size()) +
                       " does not match query length " + std::to_string(length));
}

}  // namespace

double novelty_of(const std::vector<float>& encoding, const CorpusEncodings& corpus, NoveltyMode mode) {
  check_corpus(corpus, encoding.size());
  double acc = mode == NoveltyMode::Min ? std::numeric_limits<double>::infinity() : 0.0;
  for (const auto& it : corpus.items) {
    const double d = euclidean(encoding, it.encoding);
    acc = mode == NoveltyMode::Min ? std::min(acc, d) : acc + d;
  }
  if (mode == NoveltyMode::Mean) acc /= static_cast<double>(corpus.items.size());
  return acc / std::sqrt(static_cast<double>(encoding.size()));
}

double novelty(const Network& net, const Tensor& image, const CorpusEncodings& corpus, NoveltyMode mode) {
  if (!net.has_layer(corpus.layer_name))
    throw InputError("corpus layer '" + corpus.layer_name + "' not in network");
  return novelty_of(encode_flat(net, image, corpus.layer_name), corpus, mode);
}

double value_compress(const Tensor& image) {
  const Rgb8Image raster = to_rgb8(image);
  const auto raw = static_cast<uLong>(raster.pixels.size());
  uLongf out_len = compressBound(raw);
  std::vector<Bytef> out(out_len);
  if (compress2(out.data(), &out_len, raster.pixels.data(), raw, 6) != Z_OK)
    throw Error("deflate failed");
  const double v = 1.0 - static_cast<double>(out_len) / static_cast<double>(raw);
  return std::clamp(v, 0.0, 1.0);
}

std::vector<float> centroid(const CorpusEncodings& corpus) {
  check_corpus(corpus, corpus.vector_length());
  std::vector<double> sum(corpus.vector_length(), 0.0);
  for (const auto& it : corpus.items)
    for (std::size_t i = 0; i < sum.size(); ++i) sum[i] += it.encoding[i];
  std::vector<float> c(sum.size());
  for (std::size_t i = 0; i < c.size(); ++i) c[i] = static_cast<float>(sum[i] / static_cast<double>(corpus.items.size()));
  return c;
}

namespace {

double distance_to(const std::vector<float>& a, const std::vector<float>& c) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = static_cast<double>(a[i]) - static_cast<double>(c[i]);
    s += d * d;
  }
  return std::sqrt(s);
}

}  // namespace

TypicalityResult typicality_of(const std::vector<float>& encoding, const CorpusEncodings& inspiring,
                               const CorpusEncodings& genre) {
  if (genre.items.size() < 2) throw InputError("genre corpus needs at least two members");
  check_corpus(genre, encoding.size());
  TypicalityResult r;
  r.dissimilarity = novelty_of(encoding, inspiring, NoveltyMode::Min);
  const auto c = centroid(genre);
  double radius = 0.0;
  for (const auto& it : genre.items) radius += distance_to(it.encoding, c);
  r.genre_radius = radius / static_cast<double>(genre.items.size());
  if (!(r.genre_radius > 0.0)) throw InputError("genre corpus members coincide; spread is zero");
  r.genre_distance = distance_to(encoding, c);
  r.typicality = std::exp(-r.genre_distance / r.genre_radius);
  return r;
}

TypicalityResult typicality_dissimilarity(const Network& net, const Tensor& image,
                                          const CorpusEncodings& inspiring, const CorpusEncodings& genre) {
  if (inspiring.layer_name != genre.layer_name)
    throw InputError("inspiring and genre corpora use different layers");
  if (!net.has_layer(genre.layer_name)) throw InputError("corpus layer '" + genre.layer_name + "' not in network");
  return typicality_of(encode_flat(net, image, genre.layer_name), inspiring, genre);
}

MetricsReport evaluate_metrics(const Network& net, const Tensor& image, const CorpusEncodings& inspiring,
                               const CorpusEncodings& genre, NoveltyMode mode) {
  if (inspiring.layer_name != genre.layer_name)
    throw InputError("inspiring and genre corpora use different layers");
  if (!net.has_layer(genre.layer_name)) throw InputError("corpus layer '" + genre.layer_name + "' not in network");
  const auto enc = encode_flat(net, image, genre.layer_name);
  MetricsReport r;
  r.layer_name = genre.layer_name;
  r.novelty = novelty_of(enc, inspiring, mode);
  r.value_compress = value_compress(image);
  const auto t = typicality_of(enc, inspiring, genre);
  r.typicality = t.typicality;
  r.dissimilarity = t.dissimilarity;
  r.corpus_ids = {inspiring.source, genre.source};
  return r;
}

std::string metrics_report_to_json(const MetricsReport& report) {
  nlohmann::json j = {{"novelty", report.novelty},
                      {"value_compress", report.value_compress},
                      {"typicality", report.typicality},
                      {"dissimilarity", report.dissimilarity},
                      {"layer_name", report.layer_name},
                      {"corpus_ids", report.corpus_ids}};
  return j.dump(2);
}

std::string metrics_report_table(const MetricsReport& report) {
  std::ostringstream os;
  os << std::left << std::setw(16) << "metric" << "value\n";
  os << std::fixed << std::setprecision(6);
  os << std::setw(16) << "novelty" << report.novelty << '\n';
  os << std::setw(16) << "value_compress" << report.value_compress << '\n';
  os << std::setw(16) << "typicality" << report.typicality << '\n';
  os << std::setw(16) << "dissimilarity" << report.dissimilarity << '\n';
  os << std::setw(16) << "layer" << report.layer_name << '\n';
  return os.str();
}

}  // namespace dreamhone
