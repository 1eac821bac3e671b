#include "sketchclean/retrieval.hpp"

#include <algorithm>
#include <bit>
#include <chrono>
#include <cmath>
#include <fstream>
#include <iterator>
#include <nlohmann/json.hpp>
#include <spdlog/spdlog.h>
#include <unordered_set>

#include "sketchclean/errors.hpp"

namespace sketchclean {

RetrievalIndex::RetrievalIndex(std::vector<IndexItem> items) {
  for (auto& item : items) add(std::move(item));
}

void RetrievalIndex::add(IndexItem item) {
  if (!items_.empty() && item.descriptor.size() != descriptor_length()) {
    throw ArgumentError("index descriptor lengths differ");
  }
  if (find(item.id) != nullptr) throw ArgumentError("duplicate index id: " + item.id);
  items_.push_back(std::move(item));
}

const IndexItem* RetrievalIndex::find(const std::string& id) const {
  const auto it = std::find_if(items_.begin(), items_.end(), [&](const IndexItem& i) { return i.id == id; });
  return it == items_.end() ? nullptr : &*it;
}

std::size_t RetrievalIndex::class_size(const std::string& label) const {
  return static_cast<std::size_t>(
      std::count_if(items_.begin(), items_.end(), [&](const IndexItem& i) { return i.label == label; }));
}

Descriptor embed(const SketchRaster& raster) {
  const SketchRaster small = resize_bilinear(raster, kDescriptorSide, kDescriptorSide);
  Descriptor d(small.size());
  double norm2 = 0.0;
  for (std::size_t i = 0; i < d.size(); ++i) {
    d[i] = 1.0 - small.values()[i];
    norm2 += d[i] * d[i];
  }
  if (norm2 == 0.0) return d;
  const double norm = std::sqrt(norm2);
  for (double& v : d) v /= norm;
  return d;
}

double cosine_similarity(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw ArgumentError("descriptor lengths differ");
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  if (na == 0.0 || nb == 0.0) return 0.0;
  return dot / (std::sqrt(na) * std::sqrt(nb));
}

std::vector<Hit> query(const RetrievalIndex& index, std::span<const double> q, std::size_t k) {
  if (index.empty()) throw ArgumentError("query: empty index");
  if (k == 0 || k > index.size()) throw ArgumentError("query: k must lie in [1, index size]");
  std::vector<Hit> hits;
  hits.reserve(index.size());
  for (const auto& item : index.items()) hits.push_back({item.id, item.label, cosine_similarity(q, item.descriptor)});
  const auto better = [](const Hit& a, const Hit& b) {
    if (a.similarity != b.similarity) return a.similarity > b.similarity;
    return a.id < b.id;
  };
  std::partial_sort(hits.begin(), hits.begin() + static_cast<std::ptrdiff_t>(k), hits.end(), better);
  hits.resize(k);
  return hits;
}

RetrievalReport score_retrieval(const RetrievalIndex& index, std::span<const LabeledQuery> queries, std::size_t k) {
  if (queries.empty()) throw ArgumentError("score_retrieval: no queries");
  RetrievalReport report;
  report.k = k;
  report.n_queries = queries.size();
  double precision_sum = 0.0;
  double recall_sum = 0.0;
  double seconds = 0.0;
  for (const auto& q : queries) {
    const auto started = std::chrono::steady_clock::now();
    const auto hits = query(index, q.descriptor, k);
    seconds += std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    const auto relevant = static_cast<double>(
        std::count_if(hits.begin(), hits.end(), [&](const Hit& h) { return h.label == q.label; }));
    precision_sum += relevant / static_cast<double>(k);
    const std::size_t class_size = index.class_size(q.label);
    if (class_size == 0) {
      spdlog::warn("query label '{}' is absent from the index; recall counted as 0", q.label);
    } else {
      recall_sum += relevant / static_cast<double>(class_size);
    }
  }
  const auto n = static_cast<double>(queries.size());
  report.precision = precision_sum / n;
  report.top_k_accuracy = 100.0 * report.precision;
  report.recall = recall_sum / n;
  report.mean_retrieval_time = seconds / n;
  return report;
}

AbReport ab_compare(std::span<const SketchRaster> defective, std::span<const SketchRaster> cleaned,
                    std::span<const std::string> labels, const RetrievalIndex& index, std::size_t k) {
  if (defective.size() != labels.size() || cleaned.size() != labels.size()) {
    throw ArgumentError("ab_compare: query lists and labels must align");
  }
  std::vector<LabeledQuery> a;
  std::vector<LabeledQuery> b;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    a.push_back({embed(defective[i]), labels[i]});
    b.push_back({embed(cleaned[i]), labels[i]});
  }
  return {score_retrieval(index, a, k), score_retrieval(index, b, k)};
}

namespace {

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

void put_string(std::vector<std::uint8_t>& out, const std::string& s) {
  put_u32(out, static_cast<std::uint32_t>(s.size()));
  out.insert(out.end(), s.begin(), s.end());
}

}  // namespace

void save_index(const RetrievalIndex& index, const std::filesystem::path& path) {
  std::vector<std::uint8_t> out;
  put_u32(out, static_cast<std::uint32_t>(index.descriptor_length()));
  put_u32(out, static_cast<std::uint32_t>(index.size()));
  for (const auto& item : index.items()) {
    put_string(out, item.id);
    put_string(out, item.label);
    for (double v : item.descriptor) put_u32(out, std::bit_cast<std::uint32_t>(static_cast<float>(v)));
  }
  std::ofstream file(path, std::ios::binary | std::ios::trunc);
  if (!file) throw IoError("cannot open " + path.string() + " for writing");
  file.write(reinterpret_cast<const char*>(out.data()), static_cast<std::streamsize>(out.size()));
  if (!file) throw IoError("write failed for " + path.string());
}

RetrievalIndex load_index(const std::filesystem::path& path) {
  std::ifstream file(path, std::ios::binary);
  if (!file) throw IoError("cannot open index " + path.string());
  const std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(file)), std::istreambuf_iterator<char>());
  std::size_t pos = 0;
  const auto u32 = [&]() {
    if (pos + 4 > bytes.size()) throw FormatError("index: truncated file");
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(bytes[pos + static_cast<std::size_t>(i)]) << (8 * i);
    pos += 4;
    return v;
  };
  const auto str = [&]() {
    const std::uint32_t n = u32();
    if (pos + n > bytes.size()) throw FormatError("index: truncated string");
    std::string s(bytes.begin() + static_cast<std::ptrdiff_t>(pos), bytes.begin() + static_cast<std::ptrdiff_t>(pos + n));
    pos += n;
    return s;
  };
  const std::uint32_t length = u32();
  const std::uint32_t count = u32();
  RetrievalIndex index;
  for (std::uint32_t i = 0; i < count; ++i) {
    IndexItem item;
    item.id = str();
    item.label = str();
    item.descriptor.resize(length);
    for (double& v : item.descriptor) v = static_cast<double>(std::bit_cast<float>(u32()));
    index.add(std::move(item));
  }
  if (pos != bytes.size()) throw FormatError("index: trailing bytes");
  return index;
}

std::string retrieval_report_json(const RetrievalReport& report) {
  nlohmann::json j = {{"top_k_accuracy", report.top_k_accuracy},
                      {"precision", report.precision},
                      {"recall", report.recall},
                      {"mean_retrieval_time", report.mean_retrieval_time},
                      {"n_queries", report.n_queries},
                      {"k", report.k}};
  return j.dump(2);
}

}  // namespace sketchclean
