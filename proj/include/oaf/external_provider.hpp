#pragma once

#include "oaf/pointmap.hpp"

#include <chrono>
#include <string>
#include <sys/types.h>

namespace oaf {

/// Runs a predictor as a child process (`/bin/sh -c command`) and talks to
/// it over its standard streams, one request per line:
///
///   request:  <path to image i> TAB <path to image j> LF
///   response: <path to a prediction cache file> LF
///
/// A response of the form `error <message>` reports a failed prediction.
/// Timeouts, malformed responses and unreadable caches raise ProviderError
/// or FormatError; the child is restarted on the next request after a
/// timeout.
class ExternalProvider : public PointmapProvider {
 public:
  ExternalProvider(std::string command, std::chrono::milliseconds timeout);
  ~ExternalProvider() override;
  ExternalProvider(const ExternalProvider&) = delete;
  ExternalProvider& operator=(const ExternalProvider&) = delete;

  PointmapPrediction predict(const Image& img_i, const Image& img_j) override;

 private:
  void start();
  void stop();
  std::string read_line();

  std::string command_;
  std::chrono::milliseconds timeout_;
  pid_t pid_ = -1;
  int to_child_ = -1;
  int from_child_ = -1;
  std::string pending_;
};

}  // namespace oaf
