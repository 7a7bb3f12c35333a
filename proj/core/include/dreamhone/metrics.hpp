#pragma once

#include <string>
#include <vector>

#include "dreamhone/network.hpp"

namespace dreamhone {

struct CorpusItem {
  std::string id;
  std::vector<float> encoding;
};

/// Flattened activations of one layer for a reference image set, e.g. the
/// training tiles or a genre collection.
struct CorpusEncodings {
  std::string layer_name;
  std::string source;  // free-form label such as "training-tiles" or "genre-set"
  std::vector<CorpusItem> items;

  std::size_t vector_length() const { return items.empty() ? 0 : items.front().encoding.size(); }
};

enum class NoveltyMode { Min, Mean };

/// ids default to "0", "1", ... when empty.
CorpusEncodings encode_corpus(const Network& net, const std::vector<Tensor>& images,
                              const std::string& layer_name, const std::string& source = "",
                              std::vector<std::string> ids = {});

std::vector<float> encode_flat(const Network& net, const Tensor& image, const std::string& layer_name);

double euclidean(const std::vector<float>& a, const std::vector<float>& b);

/// Distance from an encoding to the corpus (nearest member, or mean over
/// members), divided by sqrt(vector length).
double novelty_of(const std::vector<float>& encoding, const CorpusEncodings& corpus,
                  NoveltyMode mode = NoveltyMode::Min);
double novelty(const Network& net, const Tensor& image, const CorpusEncodings& corpus,
               NoveltyMode mode = NoveltyMode::Min);

/// 1 - deflate(level 6) size / raw size of the 8-bit RGB raster, clamped
/// to [0, 1]. Higher means more ordered.
double value_compress(const Tensor& image);

std::vector<float> centroid(const CorpusEncodings& corpus);

struct TypicalityResult {
  double typicality = 0.0;     // exp(-d_genre / sigma)
  double dissimilarity = 0.0;  // novelty against the inspiring set
  double genre_distance = 0.0; // d_genre, distance to the genre centroid
  double genre_radius = 0.0;   // sigma, mean member-to-centroid distance
};

TypicalityResult typicality_of(const std::vector<float>& encoding, const CorpusEncodings& inspiring,
                               const CorpusEncodings& genre);
TypicalityResult typicality_dissimilarity(const Network& net, const Tensor& image,
                                          const CorpusEncodings& inspiring, const CorpusEncodings& genre);

struct MetricsReport {
  double novelty = 0.0;
  double value_compress = 0.0;
  double typicality = 0.0;
  double dissimilarity = 0.0;
  std::string layer_name;
  std::vector<std::string> corpus_ids;
};

MetricsReport evaluate_metrics(const Network& net, const Tensor& image, const CorpusEncodings& inspiring,
                               const CorpusEncodings& genre, NoveltyMode mode = NoveltyMode::Min);

std::string metrics_report_to_json(const MetricsReport& report);
/// Fixed-order, human-readable table.
std::string metrics_report_table(const MetricsReport& report);

}  // namespace dreamhone
