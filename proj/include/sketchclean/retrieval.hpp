#pragma once

#include <cstddef>
#include <filesystem>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "sketchclean/raster.hpp"

namespace sketchclean {

/// Unit-norm (or all-zero for blank input) appearance vector.
using Descriptor = std::vector<double>;

constexpr std::size_t kDescriptorSide = 16;

struct IndexItem {
  std::string id;
  std::string label;
  Descriptor descriptor;
};

class RetrievalIndex {
 public:
  RetrievalIndex() = default;
  /// Throws ArgumentError on duplicate ids or ragged descriptor lengths.
  explicit RetrievalIndex(std::vector<IndexItem> items);

  void add(IndexItem item);
  const std::vector<IndexItem>& items() const { return items_; }
  std::size_t size() const { return items_.size(); }
  bool empty() const { return items_.empty(); }
  std::size_t descriptor_length() const { return items_.empty() ? 0 : items_.front().descriptor.size(); }
  const IndexItem* find(const std::string& id) const;
  std::size_t class_size(const std::string& label) const;

 private:
  std::vector<IndexItem> items_;
};

struct Hit {
  std::string id;
  std::string label;
  double similarity = 0.0;
};

struct RetrievalReport {
  double top_k_accuracy = 0.0;  // percent
  double precision = 0.0;
  double recall = 0.0;
  double mean_retrieval_time = 0.0;  // seconds per query
  std::size_t n_queries = 0;
  std::size_t k = 0;
};

struct LabeledQuery {
  Descriptor descriptor;
  std::string label;
};

/// 16x16 bilinear thumbnail, inverted to ink = 1, L2-normalized.
Descriptor embed(const SketchRaster& raster);

double cosine_similarity(std::span<const double> a, std::span<const double> b);

/// Exact full scan: k highest cosine similarities, ties by ascending id.
std::vector<Hit> query(const RetrievalIndex& index, std::span<const double> q, std::size_t k);

RetrievalReport score_retrieval(const RetrievalIndex& index, std::span<const LabeledQuery> queries, std::size_t k);

struct AbReport {
  RetrievalReport defective;
  RetrievalReport cleaned;
};

AbReport ab_compare(std::span<const SketchRaster> defective, std::span<const SketchRaster> cleaned,
                    std::span<const std::string> labels, const RetrievalIndex& index, std::size_t k);

// u32 descriptor length | u32 item count | per item: u32 len + id bytes, u32 len + label bytes, f32 x length
void save_index(const RetrievalIndex& index, const std::filesystem::path& path);
RetrievalIndex load_index(const std::filesystem::path& path);

std::string retrieval_report_json(const RetrievalReport& report);

}  // namespace sketchclean
