#include "gsae/container.hpp"

#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <vector>

#include "gsae/errors.hpp"
#include "gsae/prox.hpp"

namespace gsae {

namespace {

constexpr char kMagic[8] = {'G', 'S', 'A', 'E', 'B', 'I', 'N', '1'};
constexpr int kFormatVersion = 1;

void put_u64_le(std::ostream& out, std::uint64_t v) {
  unsigned char bytes[8];
  for (int i = 0; i < 8; ++i) bytes[i] = static_cast<unsigned char>(v >> (8 * i));
  out.write(reinterpret_cast<const char*>(bytes), 8);
}

std::uint64_t get_u64_le(std::istream& in, const std::string& path,
                         const char* what) {
  unsigned char bytes[8];
  if (!in.read(reinterpret_cast<char*>(bytes), 8)) {
    throw IoError(path + ": truncated while reading " + what);
  }
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(bytes[i]) << (8 * i);
  return v;
}

void write_doubles_le(std::ostream& out, const double* values, std::size_t count) {
  std::vector<unsigned char> buf(count * 8);
  for (std::size_t i = 0; i < count; ++i) {
    const auto bits = std::bit_cast<std::uint64_t>(values[i]);
    for (int b = 0; b < 8; ++b) {
      buf[i * 8 + static_cast<std::size_t>(b)] =
          static_cast<unsigned char>(bits >> (8 * b));
    }
  }
  out.write(reinterpret_cast<const char*>(buf.data()),
            static_cast<std::streamsize>(buf.size()));
}

void read_doubles_le(std::istream& in, double* values, std::size_t count,
                     const std::string& path) {
  std::vector<unsigned char> buf(count * 8);
  if (!in.read(reinterpret_cast<char*>(buf.data()),
               static_cast<std::streamsize>(buf.size()))) {
    throw IoError(path + ": truncated payload");
  }
  for (std::size_t i = 0; i < count; ++i) {
    std::uint64_t bits = 0;
    for (int b = 0; b < 8; ++b) {
      bits |= static_cast<std::uint64_t>(buf[i * 8 + static_cast<std::size_t>(b)])
              << (8 * b);
    }
    values[i] = std::bit_cast<double>(bits);
  }
}

}  // namespace

const Eigen::MatrixXd* Container::find(const std::string& name) const {
  for (const NamedMatrix& a : arrays) {
    if (a.name == name) return &a.matrix;
  }
  return nullptr;
}

const Eigen::MatrixXd& Container::require(const std::string& name) const {
  const Eigen::MatrixXd* m = find(name);
  if (m == nullptr) throw IoError("container is missing array '" + name + "'");
  return *m;
}

void save_container(const std::string& path, const Container& container) {
  nlohmann::json header;
  header["format_version"] = kFormatVersion;
  header["arrays"] = nlohmann::json::array();
  for (const NamedMatrix& a : container.arrays) {
    header["arrays"].push_back({{"name", a.name},
                                {"rows", a.matrix.rows()},
                                {"cols", a.matrix.cols()}});
  }
  header["meta"] = container.meta;
  const std::string header_text = header.dump();

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError(path + ": cannot open for writing");
  out.write(kMagic, sizeof(kMagic));
  put_u64_le(out, header_text.size());
  out.write(header_text.data(), static_cast<std::streamsize>(header_text.size()));
  std::vector<double> row;
  for (const NamedMatrix& a : container.arrays) {
    row.resize(static_cast<std::size_t>(a.matrix.cols()));
    for (Eigen::Index r = 0; r < a.matrix.rows(); ++r) {
      for (Eigen::Index c = 0; c < a.matrix.cols(); ++c) {
        row[static_cast<std::size_t>(c)] = a.matrix(r, c);
      }
      write_doubles_le(out, row.data(), row.size());
    }
  }
  out.flush();
  if (!out) throw IoError(path + ": write failed");
}

Container load_container(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError(path + ": cannot open");
  char magic[8];
  if (!in.read(magic, sizeof(magic))) {
    throw IoError(path + ": truncated at offset 0 (magic)");
  }
  if (std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) {
    throw IoError(path + ": bad magic at offset 0");
  }
  const std::uint64_t header_len = get_u64_le(in, path, "header length");
  if (header_len > (1u << 30)) throw IoError(path + ": implausible header length");
  std::string header_text(header_len, '\0');
  if (!in.read(header_text.data(), static_cast<std::streamsize>(header_len))) {
    throw IoError(path + ": truncated header at offset 16");
  }
  nlohmann::json header;
  try {
    header = nlohmann::json::parse(header_text);
  } catch (const nlohmann::json::exception& e) {
    throw IoError(path + ": header is not valid JSON: " + e.what());
  }
  if (!header.contains("format_version") ||
      header["format_version"].get<int>() != kFormatVersion) {
    throw IoError(path + ": unsupported format version");
  }
  Container container;
  container.meta = header.value("meta", nlohmann::json::object());
  std::vector<double> row;
  for (const nlohmann::json& spec : header.value("arrays", nlohmann::json::array())) {
    NamedMatrix a;
    a.name = spec.at("name").get<std::string>();
    const auto rows = spec.at("rows").get<Eigen::Index>();
    const auto cols = spec.at("cols").get<Eigen::Index>();
    if (rows < 0 || cols < 0) throw IoError(path + ": negative array shape");
    a.matrix.resize(rows, cols);
    row.resize(static_cast<std::size_t>(cols));
    for (Eigen::Index r = 0; r < rows; ++r) {
      read_doubles_le(in, row.data(), row.size(), path);
      for (Eigen::Index c = 0; c < cols; ++c) {
        a.matrix(r, c) = row[static_cast<std::size_t>(c)];
      }
    }
    container.arrays.push_back(std::move(a));
  }
  return container;
}

void save_dataset(const std::string& path, const Dataset& dataset,
                  const nlohmann::json& extra_meta) {
  Container c;
  c.arrays.push_back({"dictionary", dataset.dictionary.matrix});
  c.arrays.push_back({"observations", dataset.observations});
  c.arrays.push_back({"codes", dataset.codes_matrix()});
  c.arrays.push_back({"noise", dataset.noise});
  c.meta["num_groups"] = dataset.dictionary.structure.num_groups;
  c.meta["group_size"] = dataset.dictionary.structure.group_size;
  if (dataset.noise_snr_db) {
    c.meta["snr_db"] = *dataset.noise_snr_db;
  } else {
    c.meta["snr_db"] = nullptr;
  }
  nlohmann::json supports = nlohmann::json::array();
  for (const GroupSparseCode& code : dataset.codes) {
    supports.push_back(code.support);
  }
  c.meta["supports"] = std::move(supports);
  if (!extra_meta.empty()) c.meta["extra"] = extra_meta;
  save_container(path, c);
}

Dataset load_dataset(const std::string& path) {
  const Container c = load_container(path);
  Dataset ds;
  GroupStructure gs;
  try {
    gs.num_groups = c.meta.at("num_groups").get<int>();
    gs.group_size = c.meta.at("group_size").get<int>();
  } catch (const nlohmann::json::exception& e) {
    throw IoError(path + ": dataset meta is incomplete: " + e.what());
  }
  gs.validate();
  ds.dictionary.matrix = c.require("dictionary");
  ds.dictionary.structure = gs;
  ds.dictionary.validate();
  ds.observations = c.require("observations");
  ds.noise = c.require("noise");
  const Eigen::MatrixXd& codes = c.require("codes");
  if (codes.rows() != gs.total_columns() ||
      codes.cols() != ds.observations.cols()) {
    throw IoError(path + ": code matrix shape disagrees with the header");
  }
  const nlohmann::json& supports = c.meta.at("supports");
  if (static_cast<Eigen::Index>(supports.size()) != codes.cols()) {
    throw IoError(path + ": supports list disagrees with the code matrix");
  }
  ds.codes.resize(static_cast<std::size_t>(codes.cols()));
  for (Eigen::Index j = 0; j < codes.cols(); ++j) {
    GroupSparseCode& code = ds.codes[static_cast<std::size_t>(j)];
    code.values = codes.col(j);
    code.support = supports[static_cast<std::size_t>(j)].get<std::vector<int>>();
  }
  if (!c.meta.at("snr_db").is_null()) {
    ds.noise_snr_db = c.meta.at("snr_db").get<double>();
  }
  return ds;
}

void save_checkpoint(const std::string& path, const Checkpoint& checkpoint) {
  checkpoint.state.validate();
  Container c;
  c.arrays.push_back({"dictionary", checkpoint.state.dict.matrix});
  c.meta["num_groups"] = checkpoint.state.dict.structure.num_groups;
  c.meta["group_size"] = checkpoint.state.dict.structure.group_size;
  c.meta["lambda"] = checkpoint.state.lambda;
  c.meta["prox"] = to_string(checkpoint.state.prox);
  c.meta["unroll"] = checkpoint.state.unroll;
  if (checkpoint.state.ista_step) {
    c.meta["ista_step"] = *checkpoint.state.ista_step;
  } else {
    c.meta["ista_step"] = nullptr;
  }
  c.meta["epoch"] = checkpoint.epoch;
  save_container(path, c);
}

Checkpoint load_checkpoint(const std::string& path) {
  const Container c = load_container(path);
  Checkpoint cp;
  GroupStructure gs;
  try {
    gs.num_groups = c.meta.at("num_groups").get<int>();
    gs.group_size = c.meta.at("group_size").get<int>();
    cp.state.lambda = c.meta.at("lambda").get<double>();
    cp.state.prox = prox_kind_from_string(c.meta.at("prox").get<std::string>());
    cp.state.unroll = c.meta.at("unroll").get<int>();
    cp.epoch = c.meta.at("epoch").get<int>();
    if (!c.meta.at("ista_step").is_null()) {
      cp.state.ista_step = c.meta.at("ista_step").get<double>();
    }
  } catch (const nlohmann::json::exception& e) {
    throw IoError(path + ": checkpoint meta is incomplete: " + e.what());
  }
  gs.validate();
  cp.state.dict.matrix = c.require("dictionary");
  cp.state.dict.structure = gs;
  cp.state.validate();
  return cp;
}

void save_pgm(const std::string& path, const Eigen::MatrixXd& matrix) {
  if (matrix.size() == 0) throw ConfigError("cannot dump an empty matrix");
  if (!matrix.allFinite()) throw NumericError("matrix must be finite");
  const double lo = matrix.minCoeff();
  const double hi = matrix.maxCoeff();
  const double span = hi > lo ? hi - lo : 1.0;
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError(path + ": cannot open for writing");
  out << "P5\n" << matrix.cols() << " " << matrix.rows() << "\n255\n";
  std::vector<unsigned char> row(static_cast<std::size_t>(matrix.cols()));
  for (Eigen::Index r = 0; r < matrix.rows(); ++r) {
    for (Eigen::Index c = 0; c < matrix.cols(); ++c) {
      const double v = (matrix(r, c) - lo) / span;
      row[static_cast<std::size_t>(c)] =
          static_cast<unsigned char>(std::lround(v * 255.0));
    }
    out.write(reinterpret_cast<const char*>(row.data()),
              static_cast<std::streamsize>(row.size()));
  }
  out.flush();
  if (!out) throw IoError(path + ": write failed");
}

}  // namespace gsae
