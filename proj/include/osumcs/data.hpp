#pragma once

#include <cstddef>
#include <vector>

#include "osumcs/glm.hpp"

namespace osumcs {

// One simulated or ingested population: covariates and surrogate are free to
// read, responses must be measured through a ResponseSource.
struct Dataset {
  Mat X;  // N x p
  Vec S;  // surrogate, length N
  Vec Y;  // gold-standard response, length N; hidden from the pipeline
};

// The measurement channel. The estimation pipeline calls fetch() exactly once
// per unit it pays to label (pilot units and sampled units); tests wrap it to
// audit that discipline.
class ResponseSource {
 public:
  virtual ~ResponseSource() = default;
  virtual double fetch(std::size_t i) = 0;
};

class VectorResponse final : public ResponseSource {
 public:
  explicit VectorResponse(const Vec& y) : y_(&y) {}
  double fetch(std::size_t i) override {
    return (*y_)(static_cast<Eigen::Index>(i));
  }

 private:
  const Vec* y_;
};

class RecordingResponse final : public ResponseSource {
 public:
  explicit RecordingResponse(ResponseSource& inner) : inner_(&inner) {}
  double fetch(std::size_t i) override {
    accessed.push_back(i);
    return inner_->fetch(i);
  }

  std::vector<std::size_t> accessed;

 private:
  ResponseSource* inner_;
};

}  // namespace osumcs
