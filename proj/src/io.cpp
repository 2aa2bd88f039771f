#include "scplabel/io.hpp"

#include <algorithm>
#include <bit>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>
#include <unordered_map>

#include "scplabel/error.hpp"

namespace scplabel::io {

namespace {

class ByteWriter {
 public:
  void bytes(std::string_view s) { out_.append(s); }
  void u16(std::uint16_t v) {
    for (int i = 0; i < 2; ++i) out_.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
  }
  void u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out_.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
  }
  void f32(float v) { u32(std::bit_cast<std::uint32_t>(v)); }
  std::string take() { return std::move(out_); }

 private:
  std::string out_;
};

class ByteReader {
 public:
  ByteReader(std::string_view data, std::string what) : data_(data), what_(std::move(what)) {}

  std::string_view bytes(std::size_t n) {
    need(n);
    auto s = data_.substr(pos_, n);
    pos_ += n;
    return s;
  }
  std::uint16_t u16() {
    auto s = bytes(2);
    return static_cast<std::uint16_t>(byte(s, 0) | (byte(s, 1) << 8));
  }
  std::uint32_t u32() {
    auto s = bytes(4);
    return byte(s, 0) | (byte(s, 1) << 8) | (byte(s, 2) << 16) | (byte(s, 3) << 24);
  }
  float f32() { return std::bit_cast<float>(u32()); }
  std::size_t remaining() const { return data_.size() - pos_; }

  void need(std::size_t n) const {
    if (remaining() < n) {
      throw CorruptionError(what_ + ": truncated payload (needed " + std::to_string(n) +
                            " more bytes at offset " + std::to_string(pos_) + ", have " +
                            std::to_string(remaining()) + ")");
    }
  }

 private:
  static std::uint32_t byte(std::string_view s, std::size_t i) {
    return static_cast<unsigned char>(s[i]);
  }

  std::string_view data_;
  std::string what_;
  std::size_t pos_ = 0;
};

std::uint32_t checked_u32(std::size_t v, const char* what) {
  if (v > std::numeric_limits<std::uint32_t>::max()) {
    throw ValidationError(std::string(what) + " does not fit in u32");
  }
  return static_cast<std::uint32_t>(v);
}

void check_magic(ByteReader& r, std::string_view magic, std::uint16_t version,
                 const std::string& what) {
  if (r.remaining() < magic.size() + 2 || r.bytes(magic.size()) != magic) {
    throw FormatError(what + ": bad magic (expected \"" + std::string(magic) + "\")");
  }
  const auto v = r.u16();
  if (v != version) {
    throw FormatError(what + ": unsupported version " + std::to_string(v));
  }
}

std::ifstream open_in(const fs::path& path, std::ios::openmode mode = std::ios::in) {
  std::ifstream in(path, mode);
  if (!in) throw IoError("cannot open '" + path.string() + "' for reading");
  return in;
}

std::ofstream open_out(const fs::path& path, std::ios::openmode mode = std::ios::out) {
  if (path.has_parent_path()) {
    std::error_code ec;
    fs::create_directories(path.parent_path(), ec);
  }
  std::ofstream out(path, mode | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  return out;
}

void finish(std::ofstream& out, const fs::path& path) {
  out.flush();
  if (!out) throw IoError("failed writing '" + path.string() + "'");
}

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream is(line);
  while (std::getline(is, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

// CSV rows after the header, with the header checked against `prefix`.
std::vector<std::vector<std::string>> read_csv(const fs::path& path,
                                               std::span<const std::string> prefix,
                                               std::vector<std::string>* header_out = nullptr) {
  auto in = open_in(path);
  std::string line;
  if (!std::getline(in, line)) {
    throw ValidationError("'" + path.string() + "': missing CSV header");
  }
  if (!line.empty() && line.back() == '\r') line.pop_back();
  const auto header = split(line);
  if (header.size() < prefix.size() || !std::equal(prefix.begin(), prefix.end(), header.begin())) {
    std::string expected;
    for (const auto& p : prefix) expected += (expected.empty() ? "" : ",") + p;
    throw ValidationError("'" + path.string() + "': header must start with '" + expected + "'");
  }
  if (header_out) *header_out = header;

  std::vector<std::vector<std::string>> rows;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    auto cells = split(line);
    if (cells.size() != header.size()) {
      throw ValidationError("'" + path.string() + "' line " + std::to_string(line_no) +
                            ": expected " + std::to_string(header.size()) + " fields");
    }
    rows.push_back(std::move(cells));
  }
  return rows;
}

template <typename T>
T parse_number(const std::string& s, const fs::path& path) {
  T value{};
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
  if (ec != std::errc() || ptr != s.data() + s.size()) {
    throw ValidationError("'" + path.string() + "': invalid number '" + s + "'");
  }
  return value;
}

void check_id(const std::string& id) {
  if (id.find_first_of(",\n\r") != std::string::npos) {
    throw ValidationError("sample id '" + id + "' contains a CSV separator");
  }
}

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

std::string encode_features(const FeatureMatrix& m) {
  ByteWriter w;
  w.bytes("SCPF");
  w.u16(kFeatureFormatVersion);
  w.u32(checked_u32(m.n_samples(), "n_samples"));
  w.u32(checked_u32(m.n_dims(), "n_dims"));
  for (const auto& id : m.sample_ids()) {
    if (id.size() > std::numeric_limits<std::uint16_t>::max()) {
      throw ValidationError("sample id longer than 65535 bytes");
    }
    w.u16(static_cast<std::uint16_t>(id.size()));
    w.bytes(id);
  }
  for (double v : m.data()) w.f32(static_cast<float>(v));
  return w.take();
}

FeatureMatrix decode_features(std::string_view bytes) {
  ByteReader r(bytes, "SCPF");
  check_magic(r, "SCPF", kFeatureFormatVersion, "SCPF");
  r.need(8);
  const std::size_t n = r.u32();
  const std::size_t d = r.u32();
  std::vector<std::string> ids;
  ids.reserve(std::min<std::size_t>(n, r.remaining() / 2));
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t len = r.u16();
    ids.emplace_back(r.bytes(len));
  }
  if (d != 0 && n > r.remaining() / d / 4) {
    throw CorruptionError("SCPF: declared " + std::to_string(n) + " x " + std::to_string(d) +
                          " values exceed the payload (" + std::to_string(r.remaining()) +
                          " bytes)");
  }
  std::vector<double> data(n * d);
  for (auto& v : data) v = r.f32();
  if (r.remaining() != 0) {
    throw CorruptionError("SCPF: " + std::to_string(r.remaining()) +
                          " trailing bytes after declared payload");
  }
  if (n == 0) return FeatureMatrix(d);
  return FeatureMatrix(std::move(ids), d, std::move(data));
}

void save_features(const fs::path& path, const FeatureMatrix& m) {
  auto out = open_out(path, std::ios::binary);
  const auto bytes = encode_features(m);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  finish(out, path);
}

FeatureMatrix load_features(const fs::path& path) {
  try {
    return decode_features(read_text(path));
  } catch (const IoError&) {
    throw;
  } catch (const Error& e) {
    // Keep the error category, add the path.
    const std::string msg = "'" + path.string() + "': " + e.what();
    if (dynamic_cast<const FormatError*>(&e)) throw FormatError(msg);
    if (dynamic_cast<const CorruptionError*>(&e)) throw CorruptionError(msg);
    throw ValidationError(msg);
  }
}

FeatureMatrix quantize_f32(const FeatureMatrix& m) {
  std::vector<double> data(m.data().size());
  std::transform(m.data().begin(), m.data().end(), data.begin(),
                 [](double v) { return double(static_cast<float>(v)); });
  if (m.empty()) return FeatureMatrix(m.n_dims());
  return FeatureMatrix(m.sample_ids(), m.n_dims(), std::move(data));
}

void save_model(const fs::path& path, const LinearModel& model) {
  model.validate();
  ByteWriter w;
  w.bytes("SCPM");
  w.u16(kModelFormatVersion);
  w.u32(checked_u32(model.n_outputs(), "C"));
  w.u32(checked_u32(model.n_dims, "D"));
  for (auto c : model.label_space) {
    if (c < 0) throw ValidationError("model: negative class id");
    w.u32(static_cast<std::uint32_t>(c));
  }
  for (double v : model.weights) w.f32(static_cast<float>(v));
  const auto bytes = w.take();
  auto out = open_out(path, std::ios::binary);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  finish(out, path);
}

LinearModel load_model(const fs::path& path) {
  const auto bytes = read_text(path);
  const std::string what = "'" + path.string() + "' (SCPM)";
  ByteReader r(bytes, what);
  check_magic(r, "SCPM", kModelFormatVersion, what);
  r.need(8);
  const std::size_t c = r.u32();
  const std::size_t d = r.u32();
  r.need(c * 4);
  LinearModel m;
  m.n_dims = d;
  for (std::size_t i = 0; i < c; ++i) {
    const auto id = r.u32();
    if (id > static_cast<std::uint32_t>(std::numeric_limits<ClassId>::max())) {
      throw ValidationError(what + ": class id out of range");
    }
    m.label_space.push_back(static_cast<ClassId>(id));
  }
  if (d != 0 && c > r.remaining() / d / 4) {
    throw CorruptionError(what + ": weight payload shorter than C x D");
  }
  m.weights.resize(c * d);
  for (auto& v : m.weights) v = r.f32();
  if (r.remaining() != 0) throw CorruptionError(what + ": trailing bytes after payload");
  m.validate();
  return m;
}

LabelTable read_label_table(const fs::path& path) {
  static const std::string prefix[] = {"id", "label"};
  LabelTable out;
  for (auto& row : read_csv(path, prefix)) {
    out.emplace_back(std::move(row[0]), parse_number<ClassId>(row[1], path));
  }
  return out;
}

void write_labels(const fs::path& path, std::span<const std::string> ids,
                  std::span<const ClassId> labels) {
  if (ids.size() != labels.size()) throw ValidationError("write_labels: length mismatch");
  auto out = open_out(path);
  out << "id,label\n";
  for (std::size_t i = 0; i < ids.size(); ++i) {
    check_id(ids[i]);
    out << ids[i] << ',' << labels[i] << '\n';
  }
  finish(out, path);
}

std::vector<ClassId> align_labels(const LabelTable& table, std::span<const std::string> ids,
                                  const std::string& what) {
  std::unordered_map<std::string_view, std::size_t> index;
  index.reserve(ids.size());
  for (std::size_t i = 0; i < ids.size(); ++i) index.emplace(ids[i], i);

  std::vector<ClassId> out(ids.size());
  std::vector<bool> seen(ids.size(), false);
  for (const auto& [id, label] : table) {
    auto it = index.find(id);
    if (it == index.end()) {
      throw ValidationError(what + ": id '" + id + "' is not in the feature file");
    }
    if (seen[it->second]) throw ValidationError(what + ": duplicate id '" + id + "'");
    seen[it->second] = true;
    out[it->second] = label;
  }
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (!seen[i]) throw ValidationError(what + ": no entry for id '" + ids[i] + "'");
  }
  return out;
}

PredictionSet read_predictions(const fs::path& path, std::span<const std::string> ids,
                               std::vector<ClassId> label_space) {
  static const std::string prefix[] = {"id", "label"};
  LabelTable table;
  for (auto& row : read_csv(path, prefix)) {
    table.emplace_back(std::move(row[0]), parse_number<ClassId>(row[1], path));
  }
  PredictionSet p;
  p.model_id = path.stem().string();
  p.labels = align_labels(table, ids, "'" + path.string() + "'");
  p.sample_ids.assign(ids.begin(), ids.end());
  if (label_space.empty()) {
    std::set<ClassId> distinct(p.labels.begin(), p.labels.end());
    label_space.assign(distinct.begin(), distinct.end());
  }
  p.label_space = std::move(label_space);
  p.validate();
  return p;
}

void write_predictions(const fs::path& path, const PredictionSet& p,
                       std::span<const double> probs, std::size_t n_columns) {
  if (p.sample_ids.size() != p.labels.size()) {
    throw ValidationError("write_predictions: predictions carry no sample ids");
  }
  if (!probs.empty() && probs.size() != p.labels.size() * n_columns) {
    throw ValidationError("write_predictions: probability matrix shape mismatch");
  }
  auto out = open_out(path);
  out << "id,label";
  if (!probs.empty()) {
    for (std::size_t c = 0; c < n_columns; ++c) out << ",p" << c;
  }
  out << '\n';
  for (std::size_t i = 0; i < p.labels.size(); ++i) {
    check_id(p.sample_ids[i]);
    out << p.sample_ids[i] << ',' << p.labels[i];
    if (!probs.empty()) {
      for (std::size_t c = 0; c < n_columns; ++c) {
        out << ',' << format_double(probs[i * n_columns + c]);
      }
    }
    out << '\n';
  }
  finish(out, path);
}

void write_scenes(const fs::path& path, std::span<const std::string> ids,
                  std::span<const std::string> scene_ids) {
  if (ids.size() != scene_ids.size()) throw ValidationError("write_scenes: length mismatch");
  auto out = open_out(path);
  out << "id,scene_id\n";
  for (std::size_t i = 0; i < ids.size(); ++i) {
    check_id(ids[i]);
    check_id(scene_ids[i]);
    out << ids[i] << ',' << scene_ids[i] << '\n';
  }
  finish(out, path);
}

std::vector<std::pair<std::string, std::string>> read_scenes(const fs::path& path) {
  static const std::string prefix[] = {"id", "scene_id"};
  std::vector<std::pair<std::string, std::string>> out;
  for (auto& row : read_csv(path, prefix)) out.emplace_back(std::move(row[0]), std::move(row[1]));
  return out;
}

void write_clusters(const fs::path& path, std::span<const std::string> ids,
                    const Clustering& c) {
  if (ids.size() != c.assignment.size()) {
    throw ValidationError("write_clusters: id count does not match assignment");
  }
  auto out = open_out(path);
  out << "id,cluster,discarded\n";
  for (std::size_t i = 0; i < ids.size(); ++i) {
    check_id(ids[i]);
    const auto j = c.assignment[i];
    out << ids[i] << ',' << j << ',' << (c.per_cluster[j].discarded ? 1 : 0) << '\n';
  }
  finish(out, path);
}

ClusterTable read_clusters(const fs::path& path) {
  static const std::string prefix[] = {"id", "cluster", "discarded"};
  ClusterTable out;
  std::vector<int> flag;  // -1 unseen, else 0/1
  for (auto& row : read_csv(path, prefix)) {
    const auto j = parse_number<std::size_t>(row[1], path);
    if (row[2] != "0" && row[2] != "1") {
      throw ValidationError("'" + path.string() + "': discarded must be 0 or 1");
    }
    const int d = row[2] == "1";
    if (j >= flag.size()) flag.resize(j + 1, -1);
    if (flag[j] >= 0 && flag[j] != d) {
      throw ValidationError("'" + path.string() + "': inconsistent discarded flag for cluster " +
                            std::to_string(j));
    }
    flag[j] = d;
    out.ids.push_back(std::move(row[0]));
    out.assignment.push_back(j);
  }
  out.discarded.reserve(flag.size());
  for (int f : flag) out.discarded.push_back(f == 1);
  std::set<std::string_view> distinct(out.ids.begin(), out.ids.end());
  if (distinct.size() != out.ids.size()) {
    throw ValidationError("'" + path.string() + "': duplicate sample id");
  }
  return out;
}

void write_pseudo_labels(const fs::path& path, std::span<const std::string> ids,
                         const PseudoLabels& labels) {
  if (ids.size() != labels.labels.size()) {
    throw ValidationError("write_pseudo_labels: length mismatch");
  }
  auto out = open_out(path);
  out << "id,label,provenance\n";
  for (std::size_t i = 0; i < ids.size(); ++i) {
    check_id(ids[i]);
    out << ids[i] << ',' << labels.labels[i] << ',' << labels.provenance[i].to_string() << '\n';
  }
  finish(out, path);
}

std::vector<PseudoLabelRow> read_pseudo_labels(const fs::path& path) {
  static const std::string prefix[] = {"id", "label", "provenance"};
  std::vector<PseudoLabelRow> out;
  for (auto& row : read_csv(path, prefix)) {
    out.push_back({std::move(row[0]), parse_number<ClassId>(row[1], path), std::move(row[2])});
  }
  return out;
}

void write_text(const fs::path& path, const std::string& text) {
  auto out = open_out(path, std::ios::binary);
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  finish(out, path);
}

std::string read_text(const fs::path& path) {
  auto in = open_in(path, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace scplabel::io
