#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "dpsrefine/diffusion.hpp"
#include "dpsrefine/types.hpp"

namespace dpsrefine {

/// Byte-exact noise-predictor protocol, little-endian throughout.
/// Request payload:  "ADPR" + u8 version(1) + u32 t + u32 L + u32 K,
///                   then L*K f32 real plane and L*K f32 imaginary plane
///                   of the compressive state (frame-major, bin-minor).
/// Response payload: "ADPE" + u32 L + u32 K + the same two-plane layout
///                   carrying eps_hat.
/// Transport: each payload is framed by a u32 little-endian byte count.
namespace wire {

inline constexpr char kRequestMagic[4] = {'A', 'D', 'P', 'R'};
inline constexpr char kResponseMagic[4] = {'A', 'D', 'P', 'E'};
inline constexpr std::uint8_t kVersion = 1;

struct Request {
  int t = 0;
  ComplexSpectrogram x;  // single channel, compressive domain
};

std::vector<std::uint8_t> encode_request(const ComplexSpectrogram& x_t_p, int t);
std::vector<std::uint8_t> encode_response(const ComplexSpectrogram& eps_hat);

/// Throw ExternalDenoiserError with the offending byte offset on malformed
/// input.
Request decode_request(const std::vector<std::uint8_t>& payload);
ComplexSpectrogram decode_response(const std::vector<std::uint8_t>& payload,
                                   int expect_frames, int expect_bins);

}  // namespace wire

/// Blocking byte-stream endpoint over a pair of file descriptors. Owns the
/// descriptors and, when it spawned a subprocess, reaps it on destruction.
/// Constructing one sets SIGPIPE to ignored process-wide so a dying peer
/// reports as ExternalDenoiserError instead of killing the process.
class StreamTransport {
 public:
  StreamTransport(int read_fd, int write_fd, int child_pid = -1);
  ~StreamTransport();
  StreamTransport(StreamTransport&& other) noexcept;
  StreamTransport& operator=(StreamTransport&&) = delete;
  StreamTransport(const StreamTransport&) = delete;

  /// Launch `command` through /bin/sh with the protocol on its stdin/stdout.
  static StreamTransport spawn(const std::string& command);
  /// Connect to a listening host:port.
  static StreamTransport connect_tcp(const std::string& host, int port);

  void write_frame(const std::vector<std::uint8_t>& payload);
  /// Reads one length-prefixed frame; empty result means orderly EOF.
  std::vector<std::uint8_t> read_frame(int timeout_ms);

  void close_write();

 private:
  int read_fd_ = -1;
  int write_fd_ = -1;
  int child_pid_ = -1;
};

/// DenoiserInterface backed by a subprocess or socket speaking the wire
/// protocol. Requests are serialized: one in flight at a time.
class ExternalDenoiser : public DenoiserInterface {
 public:
  explicit ExternalDenoiser(StreamTransport transport, int timeout_ms = 30000);

  /// endpoint is either "host:port" (numeric port) or a shell command.
  static std::unique_ptr<ExternalDenoiser> from_endpoint(const std::string& endpoint,
                                                         int timeout_ms = 30000);

  ComplexSpectrogram predict_noise(const ComplexSpectrogram& x_t_p, int t) override;
  bool has_exact_vjp() const override { return false; }

 private:
  StreamTransport transport_;
  int timeout_ms_;
};

/// Serve a denoiser over the wire protocol until EOF on read_fd. Exceptions
/// from the denoiser terminate the loop (and so the connection).
void serve_denoiser(DenoiserInterface& denoiser, int read_fd, int write_fd);

}  // namespace dpsrefine
