#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <limits>
#include <string>
#include <vector>

#include "doctest.h"
#include "gsae/container.hpp"
#include "gsae/csv.hpp"
#include "gsae/errors.hpp"
#include "gsae/idx.hpp"
#include "gsae/synth.hpp"
#include "testutil.hpp"

using gsae::Container;
using gsae::NamedMatrix;

namespace {

void corrupt_byte(const std::string& path, std::size_t offset, char value) {
  std::fstream f(path, std::ios::in | std::ios::out | std::ios::binary);
  f.seekp(static_cast<std::streamoff>(offset));
  f.put(value);
}

}  // namespace

TEST_CASE("container: bit-exact round trip including awkward doubles") {
  testutil::TempDir tmp;
  Container c;
  Eigen::MatrixXd weird(2, 3);
  weird << 0.1, -0.0, std::numeric_limits<double>::quiet_NaN(),
      std::numeric_limits<double>::denorm_min(),
      std::numeric_limits<double>::max(), -1.0 / 3.0;
  c.arrays.push_back({"weird", weird});
  c.arrays.push_back({"empty_meta_carrier", Eigen::MatrixXd::Zero(1, 1)});
  c.meta["note"] = "round trip";
  c.meta["value"] = 42;
  const std::string path = tmp.file("weird.gsae");
  gsae::save_container(path, c);

  const Container back = gsae::load_container(path);
  REQUIRE(back.arrays.size() == 2);
  CHECK(back.arrays[0].name == "weird");
  const Eigen::MatrixXd& m = back.require("weird");
  REQUIRE(m.rows() == 2);
  REQUIRE(m.cols() == 3);
  CHECK(std::memcmp(m.data(), weird.data(), sizeof(double) * 6) == 0);
  CHECK(back.meta["note"] == "round trip");
  CHECK(back.meta["value"] == 42);
  CHECK(back.find("missing") == nullptr);
  CHECK_THROWS_AS(back.require("missing"), gsae::IoError);

  // identical content serializes to identical bytes
  const std::string again = tmp.file("weird2.gsae");
  gsae::save_container(again, back);
  CHECK(testutil::read_file(path) == testutil::read_file(again));
}

TEST_CASE("container: corrupt files are rejected") {
  testutil::TempDir tmp;
  CHECK_THROWS_AS(gsae::load_container(tmp.file("absent.gsae")), gsae::IoError);

  Container c;
  c.arrays.push_back({"m", Eigen::MatrixXd::Ones(4, 4)});
  const std::string path = tmp.file("victim.gsae");
  gsae::save_container(path, c);

  corrupt_byte(path, 0, 'X');  // magic
  CHECK_THROWS_AS(gsae::load_container(path), gsae::IoError);

  gsae::save_container(path, c);
  const std::string whole = testutil::read_file(path);
  std::ofstream trunc(path, std::ios::binary | std::ios::trunc);
  trunc.write(whole.data(), static_cast<std::streamsize>(whole.size() - 9));
  trunc.close();
  CHECK_THROWS_AS(gsae::load_container(path), gsae::IoError);
}

TEST_CASE("dataset: full round trip with and without noise") {
  testutil::TempDir tmp;
  gsae::SynthConfig cfg;
  cfg.signal_dim = 12;
  cfg.structure = {4, 3};
  cfg.active_groups = 2;
  cfg.num_samples = 25;
  cfg.snr_db = 8.0;
  cfg.seed = 93;
  const gsae::Dataset ds = gsae::generate(cfg);
  const std::string path = tmp.file("noisy.gsae");
  gsae::save_dataset(path, ds);

  const gsae::Dataset back = gsae::load_dataset(path);
  CHECK(back.dictionary.matrix == ds.dictionary.matrix);
  CHECK(back.dictionary.structure == ds.dictionary.structure);
  CHECK(back.observations == ds.observations);
  CHECK(back.noise == ds.noise);
  REQUIRE(back.noise_snr_db.has_value());
  CHECK(*back.noise_snr_db == 8.0);
  REQUIRE(back.codes.size() == ds.codes.size());
  for (std::size_t i = 0; i < ds.codes.size(); ++i) {
    CHECK(back.codes[i].values == ds.codes[i].values);
    CHECK(back.codes[i].support == ds.codes[i].support);
  }

  cfg.snr_db.reset();
  const gsae::Dataset clean = gsae::generate(cfg);
  const std::string clean_path = tmp.file("clean.gsae");
  gsae::save_dataset(clean_path, clean);
  const gsae::Dataset clean_back = gsae::load_dataset(clean_path);
  CHECK_FALSE(clean_back.noise_snr_db.has_value());
  CHECK(clean_back.noise.isZero(0.0));
}

TEST_CASE("dataset: loading rejects a container missing arrays") {
  testutil::TempDir tmp;
  Container c;
  c.arrays.push_back({"dictionary", Eigen::MatrixXd::Ones(4, 6)});
  c.meta["num_groups"] = 3;
  c.meta["group_size"] = 2;
  const std::string path = tmp.file("partial.gsae");
  gsae::save_container(path, c);
  CHECK_THROWS_AS(gsae::load_dataset(path), gsae::IoError);
}

TEST_CASE("checkpoint: state round trip across prox kinds and steps") {
  testutil::TempDir tmp;
  gsae::Checkpoint ck;
  ck.state.dict = testutil::random_dict(6, 3, 2, 94);
  ck.state.lambda = 1.75;
  ck.state.prox = gsae::ProxKind::SoftThreshold;
  ck.state.unroll = 7;
  ck.state.ista_step = 0.125;
  ck.epoch = 42;
  const std::string path = tmp.file("ck.gsae");
  gsae::save_checkpoint(path, ck);
  const gsae::Checkpoint back = gsae::load_checkpoint(path);
  CHECK(back.state.dict.matrix == ck.state.dict.matrix);
  CHECK(back.state.dict.structure == ck.state.dict.structure);
  CHECK(back.state.lambda == 1.75);
  CHECK(back.state.prox == gsae::ProxKind::SoftThreshold);
  CHECK(back.state.unroll == 7);
  REQUIRE(back.state.ista_step.has_value());
  CHECK(*back.state.ista_step == 0.125);
  CHECK(back.epoch == 42);

  ck.state.prox = gsae::ProxKind::GroupSoftThreshold;
  ck.state.ista_step.reset();
  gsae::save_checkpoint(path, ck);
  const gsae::Checkpoint plain = gsae::load_checkpoint(path);
  CHECK(plain.state.prox == gsae::ProxKind::GroupSoftThreshold);
  CHECK_FALSE(plain.state.ista_step.has_value());
}

TEST_CASE("pgm: header and payload of a known ramp") {
  testutil::TempDir tmp;
  Eigen::MatrixXd m(2, 2);
  m << 0.0, 1.0, 2.0, 4.0;
  const std::string path = tmp.file("ramp.pgm");
  gsae::save_pgm(path, m);
  const std::string bytes = testutil::read_file(path);
  CHECK(bytes.rfind("P5\n2 2\n255\n", 0) == 0);
  const std::string payload = bytes.substr(bytes.size() - 4);
  CHECK(static_cast<unsigned char>(payload[0]) == 0);
  CHECK(static_cast<unsigned char>(payload[3]) == 255);
}

TEST_CASE("idx: image and label round trips on exact u8 data") {
  testutil::TempDir tmp;
  gsae::IdxImages imgs;
  imgs.image_rows = 2;
  imgs.image_cols = 2;
  imgs.pixels.resize(4, 2);
  imgs.pixels.col(0) << 0.0, 128.0 / 255.0, 1.0, 0.0;
  imgs.pixels.col(1) << 1.0, 1.0, 0.0, 37.0 / 255.0;
  const std::string ipath = tmp.file("imgs-idx3-ubyte");
  gsae::save_idx_images(ipath, imgs);
  const gsae::IdxImages back = gsae::load_idx_images(ipath);
  CHECK(back.image_rows == 2);
  CHECK(back.image_cols == 2);
  CHECK(back.pixels == imgs.pixels);

  const std::vector<int> labels = {3, 1, 4, 1, 5, 9};
  const std::string lpath = tmp.file("labels-idx1-ubyte");
  gsae::save_idx_labels(lpath, labels);
  CHECK(gsae::load_idx_labels(lpath) == labels);
}

TEST_CASE("idx: malformed files are rejected") {
  testutil::TempDir tmp;
  CHECK_THROWS_AS(gsae::load_idx_images(tmp.file("nope")), gsae::IoError);

  const std::string path = tmp.file("bad-idx3-ubyte");
  gsae::IdxImages imgs;
  imgs.image_rows = 2;
  imgs.image_cols = 2;
  imgs.pixels = Eigen::MatrixXd::Zero(4, 3);
  gsae::save_idx_images(path, imgs);
  corrupt_byte(path, 3, 0x01);  // image magic -> label magic
  CHECK_THROWS_AS(gsae::load_idx_images(path), gsae::IoError);

  gsae::save_idx_images(path, imgs);
  const std::string whole = testutil::read_file(path);
  std::ofstream trunc(path, std::ios::binary | std::ios::trunc);
  trunc.write(whole.data(), static_cast<std::streamsize>(whole.size() - 2));
  trunc.close();
  CHECK_THROWS_AS(gsae::load_idx_images(path), gsae::IoError);
}

TEST_CASE("csv: value formatting survives a parse round trip") {
  const double values[] = {0.1, -1.0 / 3.0, 1e-300, 12345.6789,
                           std::numeric_limits<double>::max()};
  for (const double v : values) {
    const std::string s = gsae::format_double(v);
    CHECK(std::strtod(s.c_str(), nullptr) == v);
  }
  CHECK(gsae::format_double(2.0) == "2");
}

TEST_CASE("csv: writer enforces the column count") {
  testutil::TempDir tmp;
  const std::string path = tmp.file("t.csv");
  {
    gsae::CsvWriter w(path, {"a", "b"});
    w.write_row(std::vector<double>{1.0, 0.5});
    w.write_row(std::vector<std::string>{"x", "y"});
    CHECK_THROWS_AS(w.write_row(std::vector<double>{1.0}), gsae::DimensionError);
  }
  const std::string text = testutil::read_file(path);
  CHECK(text.rfind("a,b\n", 0) == 0);
  CHECK(text.find("1,0.5\n") != std::string::npos);
  CHECK(text.find("x,y\n") != std::string::npos);
}

TEST_CASE("checkpoint: plain descent training resumes bit for bit") {
  testutil::TempDir tmp;
  gsae::SynthConfig cfg;
  cfg.signal_dim = 16;
  cfg.structure = {5, 2};
  cfg.active_groups = 2;
  cfg.num_samples = 40;
  cfg.seed = 95;
  const gsae::Dataset ds = gsae::generate(cfg);

  gsae::TrainConfig tcfg;
  tcfg.optimizer = gsae::Optimizer::PlainGd;
  tcfg.learning_rate = 5e-4;
  tcfg.epochs = 10;

  gsae::AutoencoderState straight{ds.dictionary, 2.0,
                                  gsae::ProxKind::GroupSoftThreshold, 1, {}};
  gsae::Rng rng(96);
  straight.dict = gsae::perturb_init(ds.dictionary, 0.8, rng);
  gsae::AutoencoderState staged = straight;

  gsae::train(straight, ds.observations, tcfg);

  tcfg.epochs = 4;
  gsae::train(staged, ds.observations, tcfg);
  const std::string path = tmp.file("stage.gsae");
  gsae::save_checkpoint(path, {staged, 4});
  const gsae::Checkpoint resumed = gsae::load_checkpoint(path);
  gsae::AutoencoderState rest = resumed.state;
  tcfg.epochs = 6;
  gsae::train(rest, ds.observations, tcfg);

  CHECK(rest.dict.matrix == straight.dict.matrix);
}
