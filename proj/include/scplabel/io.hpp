#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "scplabel/classifier.hpp"
#include "scplabel/clustering.hpp"
#include "scplabel/features.hpp"
#include "scplabel/labeling.hpp"
#include "scplabel/synthgen.hpp"

namespace scplabel::io {

namespace fs = std::filesystem;

// SCPF: "SCPF" | u16 version=1 | u32 n_samples | u32 n_dims |
//       n_samples x (u16 byte length + UTF-8 id) | n_samples*n_dims f32.
// All integers and floats little-endian. Values are stored as f32, so a
// matrix round-trips bit-exactly once its values are f32-representable.
inline constexpr std::uint16_t kFeatureFormatVersion = 1;
std::string encode_features(const FeatureMatrix& m);
FeatureMatrix decode_features(std::string_view bytes);
void save_features(const fs::path& path, const FeatureMatrix& m);
FeatureMatrix load_features(const fs::path& path);

/// Rounds every value through f32, i.e. what a save/load cycle produces.
FeatureMatrix quantize_f32(const FeatureMatrix& m);

// SCPM: "SCPM" | u16 version=1 | u32 C | u32 D | C x u32 global class id
//       (the label space, in output order) | C*D f32 weights, row-major.
inline constexpr std::uint16_t kModelFormatVersion = 1;
void save_model(const fs::path& path, const LinearModel& model);
LinearModel load_model(const fs::path& path);

/// (id, label) rows of an `id,label` CSV, in file order.
using LabelTable = std::vector<std::pair<std::string, ClassId>>;

LabelTable read_label_table(const fs::path& path);
void write_labels(const fs::path& path, std::span<const std::string> ids,
                  std::span<const ClassId> labels);

/// Joins a label table onto `ids` (any row order). Every id must appear
/// exactly once on both sides.
std::vector<ClassId> align_labels(const LabelTable& table, std::span<const std::string> ids,
                                  const std::string& what);

/// Reads an `id,label[,p0..]` predictions CSV aligned to `ids`. The model id is
/// the file stem; the label space is `label_space` if given, else the sorted
/// distinct labels present.
PredictionSet read_predictions(const fs::path& path, std::span<const std::string> ids,
                               std::vector<ClassId> label_space = {});

/// `probs` is empty or n_samples x n_columns; columns become p0..p{C-1}.
void write_predictions(const fs::path& path, const PredictionSet& p,
                       std::span<const double> probs = {}, std::size_t n_columns = 0);

void write_scenes(const fs::path& path, std::span<const std::string> ids,
                  std::span<const std::string> scene_ids);
std::vector<std::pair<std::string, std::string>> read_scenes(const fs::path& path);

/// `id,cluster,discarded` CSV.
void write_clusters(const fs::path& path, std::span<const std::string> ids,
                    const Clustering& c);

/// A clusters CSV read back in file order. k is one more than the largest
/// cluster id; `discarded` has one flag per cluster.
struct ClusterTable {
  std::vector<std::string> ids;
  std::vector<std::size_t> assignment;
  std::vector<bool> discarded;

  std::size_t k() const { return discarded.size(); }
};
ClusterTable read_clusters(const fs::path& path);

void write_pseudo_labels(const fs::path& path, std::span<const std::string> ids,
                         const PseudoLabels& labels);

/// (id, label, provenance) rows in file order.
struct PseudoLabelRow {
  std::string id;
  ClassId label = 0;
  std::string provenance;
};
std::vector<PseudoLabelRow> read_pseudo_labels(const fs::path& path);

void write_text(const fs::path& path, const std::string& text);
std::string read_text(const fs::path& path);

}  // namespace scplabel::io
