#include "seizure/rotforest.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

#include "seizure/bytes.hpp"
#include "seizure/error.hpp"

namespace seizure {

namespace {

void put(std::string& out, double v) {
  char buf[32];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  out.append(buf, res.ptr);
}

void put(std::string& out, long long v) {
  char buf[24];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  out.append(buf, res.ptr);
}

/// Walks a text blob line by line, tracking position for error messages.
class LineCursor {
 public:
  explicit LineCursor(std::string_view text, std::size_t base_line = 0)
      : text_(text), line_no_(base_line) {}

  bool done() const noexcept { return pos_ >= text_.size(); }

  std::string_view next() {
    if (done()) fail("unexpected end of data");
    line_start_ = pos_;
    ++line_no_;
    const std::size_t nl = text_.find('\n', pos_);
    if (nl == std::string_view::npos) fail("truncated line");
    const auto line = text_.substr(pos_, nl - pos_);
    pos_ = nl + 1;
    return line;
  }

  /// Next line split on single spaces; the first token must equal `tag`.
  std::vector<std::string_view> expect(std::string_view tag, std::size_t fields) {
    auto tokens = split(next());
    if (tokens.empty() || tokens[0] != tag) fail("expected '" + std::string(tag) + "'");
    if (tokens.size() != fields + 1) {
      fail("'" + std::string(tag) + "' needs " + std::to_string(fields) + " fields");
    }
    return tokens;
  }

  static std::vector<std::string_view> split(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (start <= line.size()) {
      const std::size_t sp = line.find(' ', start);
      if (sp == std::string_view::npos) {
        out.push_back(line.substr(start));
        break;
      }
      out.push_back(line.substr(start, sp - start));
      start = sp + 1;
    }
    return out;
  }

  template <typename T>
  T number(std::string_view token) {
    T v{};
    auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), v);
    if (ec != std::errc() || ptr != token.data() + token.size() || token.empty()) {
      fail("bad number '" + std::string(token) + "'");
    }
    return v;
  }

  [[noreturn]] void fail(const std::string& what) const {
    throw FormatError("model line " + std::to_string(line_no_) + " (offset " +
                      std::to_string(line_start_) + "): " + what);
  }

  std::size_t offset() const noexcept { return pos_; }

 private:
  std::string_view text_;
  std::size_t pos_ = 0;
  std::size_t line_start_ = 0;
  std::size_t line_no_;
};

void write_member(std::string& out, const RotationMember& member) {
  const auto& r = member.rotation;
  out += "rotation ";
  put(out, static_cast<long long>(r.rows()));
  out += ' ';
  put(out, static_cast<long long>(r.cols()));
  out += '\n';
  for (Eigen::Index i = 0; i < r.rows(); ++i) {
    for (Eigen::Index j = 0; j < r.cols(); ++j) {
      if (j) out += ' ';
      put(out, r(i, j));
    }
    out += '\n';
  }
  const auto& nodes = member.tree.nodes();
  out += "tree ";
  put(out, static_cast<long long>(nodes.size()));
  out += '\n';
  for (const auto& n : nodes) {
    if (n.is_leaf()) {
      out += "leaf ";
    } else {
      out += "split ";
      put(out, static_cast<long long>(n.feature));
      out += ' ';
      put(out, n.threshold);
      out += ' ';
      put(out, static_cast<long long>(n.left));
      out += ' ';
      put(out, static_cast<long long>(n.right));
      out += ' ';
    }
    put(out, n.distribution[0]);
    out += ' ';
    put(out, n.distribution[1]);
    out += '\n';
  }
}

RotationMember read_member(LineCursor& in) {
  RotationMember member;
  const auto head = in.expect("rotation", 2);
  const auto rows = in.number<long long>(head[1]);
  const auto cols = in.number<long long>(head[2]);
  if (rows < 1 || rows != cols || rows > 1'000'000) in.fail("rotation must be square and non-empty");
  member.rotation.resize(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    const auto tokens = LineCursor::split(in.next());
    if (static_cast<long long>(tokens.size()) != cols) in.fail("rotation row has the wrong width");
    for (Eigen::Index j = 0; j < cols; ++j) {
      member.rotation(i, j) = in.number<double>(tokens[static_cast<std::size_t>(j)]);
    }
  }
  const auto tree_head = in.expect("tree", 1);
  const auto count = in.number<long long>(tree_head[1]);
  if (count < 1 || count > 100'000'000) in.fail("bad node count");
  std::vector<DecisionTree::Node> nodes(static_cast<std::size_t>(count));
  for (auto& n : nodes) {
    const auto tokens = LineCursor::split(in.next());
    if (tokens.size() == 3 && tokens[0] == "leaf") {
      n.distribution = {in.number<double>(tokens[1]), in.number<double>(tokens[2])};
    } else if (tokens.size() == 7 && tokens[0] == "split") {
      n.feature = in.number<int>(tokens[1]);
      if (n.feature < 0 || n.feature >= cols) in.fail("split feature out of range");
      n.threshold = in.number<double>(tokens[2]);
      n.left = in.number<int>(tokens[3]);
      n.right = in.number<int>(tokens[4]);
      n.distribution = {in.number<double>(tokens[5]), in.number<double>(tokens[6])};
    } else {
      in.fail("expected a 'leaf' or 'split' node");
    }
  }
  try {
    member.tree = DecisionTree(std::move(nodes));
  } catch (const FormatError& e) {
    in.fail(e.what());
  }
  return member;
}

}  // namespace

std::string serialize_member(const RotationMember& member) {
  std::string out;
  write_member(out, member);
  return out;
}

RotationMember parse_member(std::string_view text) {
  LineCursor in(text);
  RotationMember m = read_member(in);
  if (!in.done()) in.fail("trailing data after member");
  return m;
}

std::string serialize_model(const RotationForestModel& model) {
  const auto& c = model.config();
  std::string out = "rotforest ";
  put(out, static_cast<long long>(RotationForestModel::kFormatVersion));
  out += "\nconfig ";
  put(out, static_cast<long long>(c.ensemble_size));
  out += ' ';
  put(out, static_cast<long long>(c.features_per_subset));
  out += ' ';
  put(out, c.pca_sample_fraction);
  out += ' ';
  if (c.tree.max_depth) {
    put(out, static_cast<long long>(*c.tree.max_depth));
  } else {
    out += "none";
  }
  out += ' ';
  put(out, static_cast<long long>(c.tree.min_leaf));
  out += ' ' + std::to_string(c.seed) + '\n';
  out += "features ";
  put(out, static_cast<long long>(model.feature_names().size()));
  out += '\n';
  for (const auto& name : model.feature_names()) out += name + '\n';
  out += "members ";
  put(out, static_cast<long long>(model.members().size()));
  out += '\n';
  for (const auto& m : model.members()) write_member(out, m);
  out += "end\n";
  return out;
}

RotationForestModel parse_model(std::string_view text) {
  LineCursor in(text);
  const auto head = in.expect("rotforest", 1);
  const int version = in.number<int>(head[1]);
  if (version > RotationForestModel::kFormatVersion) {
    throw UnsupportedVersionError("model format version " + std::to_string(version) +
                                  " is newer than supported version " +
                                  std::to_string(RotationForestModel::kFormatVersion));
  }
  if (version < 1) in.fail("bad format version");

  const auto cfg = in.expect("config", 6);
  RotationForestConfig config;
  config.ensemble_size = in.number<int>(cfg[1]);
  config.features_per_subset = in.number<int>(cfg[2]);
  config.pca_sample_fraction = in.number<double>(cfg[3]);
  if (cfg[4] != "none") config.tree.max_depth = in.number<int>(cfg[4]);
  config.tree.min_leaf = in.number<int>(cfg[5]);
  config.seed = in.number<std::uint64_t>(cfg[6]);
  try {
    config.validate();
  } catch (const ParameterError& e) {
    in.fail(e.what());
  }

  const auto feat = in.expect("features", 1);
  const auto p = in.number<long long>(feat[1]);
  if (p < 1 || p > 1'000'000) in.fail("bad feature count");
  std::vector<std::string> names;
  for (long long i = 0; i < p; ++i) names.emplace_back(in.next());

  const auto mem = in.expect("members", 1);
  const auto count = in.number<long long>(mem[1]);
  if (count < 1 || count > 1'000'000) in.fail("bad member count");
  std::vector<RotationMember> members;
  for (long long i = 0; i < count; ++i) {
    members.push_back(read_member(in));
    if (members.back().rotation.rows() != p) in.fail("rotation size does not match feature count");
  }
  if (in.next() != "end") in.fail("expected 'end'");
  if (!in.done()) in.fail("trailing data after 'end'");
  return RotationForestModel(config, std::move(names), std::move(members));
}

void save_model(const RotationForestModel& model, const std::filesystem::path& path) {
  write_file_atomic(path, serialize_model(model));
}

RotationForestModel load_model(const std::filesystem::path& path) {
  return parse_model(read_file(path));
}

}  // namespace seizure
