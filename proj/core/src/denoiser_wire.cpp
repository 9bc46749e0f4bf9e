#include "dpsrefine/denoiser_wire.hpp"

#include <arpa/inet.h>
#include <fcntl.h>
#include <netdb.h>
#include <poll.h>
#include <signal.h>
#include <sys/socket.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>
#include <mutex>
#include <utility>

namespace dpsrefine {

namespace {

// A peer that dies mid-run must surface as ExternalDenoiserError (EPIPE),
// not terminate the process.
void ignore_sigpipe_once() {
  static std::once_flag flag;
  std::call_once(flag, [] { ::signal(SIGPIPE, SIG_IGN); });
}

}  // namespace

namespace wire {

namespace {

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  out.push_back(static_cast<std::uint8_t>(v & 0xFF));
  out.push_back(static_cast<std::uint8_t>((v >> 8) & 0xFF));
  out.push_back(static_cast<std::uint8_t>((v >> 16) & 0xFF));
  out.push_back(static_cast<std::uint8_t>((v >> 24) & 0xFF));
}

std::uint32_t get_u32(const std::vector<std::uint8_t>& b, std::size_t off) {
  return static_cast<std::uint32_t>(b[off]) |
         (static_cast<std::uint32_t>(b[off + 1]) << 8) |
         (static_cast<std::uint32_t>(b[off + 2]) << 16) |
         (static_cast<std::uint32_t>(b[off + 3]) << 24);
}

void put_f32(std::vector<std::uint8_t>& out, float v) {
  std::uint32_t bits;
  std::memcpy(&bits, &v, 4);
  put_u32(out, bits);
}

float get_f32(const std::vector<std::uint8_t>& b, std::size_t off) {
  const std::uint32_t bits = get_u32(b, off);
  float v;
  std::memcpy(&v, &bits, 4);
  return v;
}

void put_planes(std::vector<std::uint8_t>& out, const ComplexSpectrogram& s) {
  for (const auto& v : s.data) put_f32(out, static_cast<float>(v.real()));
  for (const auto& v : s.data) put_f32(out, static_cast<float>(v.imag()));
}

void need(const std::vector<std::uint8_t>& b, std::size_t at, std::size_t count,
          const char* what) {
  if (b.size() < at + count)
    throw ExternalDenoiserError(std::string(what) + " truncated at byte " +
                                std::to_string(b.size()) + ", expected " +
                                std::to_string(at + count) + " bytes");
}

}  // namespace

std::vector<std::uint8_t> encode_request(const ComplexSpectrogram& x_t_p, int t) {
  if (x_t_p.channels != 1)
    throw InvalidInput("encode_request: state must be single-channel");
  std::vector<std::uint8_t> out;
  out.reserve(17 + 8 * x_t_p.data.size());
  out.insert(out.end(), kRequestMagic, kRequestMagic + 4);
  out.push_back(kVersion);
  put_u32(out, static_cast<std::uint32_t>(t));
  put_u32(out, static_cast<std::uint32_t>(x_t_p.frames));
  put_u32(out, static_cast<std::uint32_t>(x_t_p.bins));
  put_planes(out, x_t_p);
  return out;
}

std::vector<std::uint8_t> encode_response(const ComplexSpectrogram& eps_hat) {
  if (eps_hat.channels != 1)
    throw InvalidInput("encode_response: eps_hat must be single-channel");
  std::vector<std::uint8_t> out;
  out.reserve(12 + 8 * eps_hat.data.size());
  out.insert(out.end(), kResponseMagic, kResponseMagic + 4);
  put_u32(out, static_cast<std::uint32_t>(eps_hat.frames));
  put_u32(out, static_cast<std::uint32_t>(eps_hat.bins));
  put_planes(out, eps_hat);
  return out;
}

Request decode_request(const std::vector<std::uint8_t>& b) {
  need(b, 0, 17, "request header");
  if (std::memcmp(b.data(), kRequestMagic, 4) != 0)
    throw ExternalDenoiserError("bad request magic at byte 0");
  if (b[4] != kVersion)
    throw ExternalDenoiserError("unsupported protocol version at byte 4: " +
                                std::to_string(b[4]));
  Request req;
  req.t = static_cast<int>(get_u32(b, 5));
  const std::uint32_t L = get_u32(b, 9);
  const std::uint32_t K = get_u32(b, 13);
  const std::size_t n = static_cast<std::size_t>(L) * K;
  need(b, 17, 8 * n, "request payload");
  req.x = ComplexSpectrogram(static_cast<int>(L), static_cast<int>(K), 1,
                             Domain::compressive);
  for (std::size_t i = 0; i < n; ++i)
    req.x.data[i] = cdouble(get_f32(b, 17 + 4 * i), get_f32(b, 17 + 4 * (n + i)));
  return req;
}

ComplexSpectrogram decode_response(const std::vector<std::uint8_t>& b,
                                   int expect_frames, int expect_bins) {
  need(b, 0, 12, "response header");
  if (std::memcmp(b.data(), kResponseMagic, 4) != 0)
    throw ExternalDenoiserError("bad response magic at byte 0");
  const std::uint32_t L = get_u32(b, 4);
  const std::uint32_t K = get_u32(b, 8);
  if (static_cast<int>(L) != expect_frames || static_cast<int>(K) != expect_bins)
    throw ExternalDenoiserError(
        "response shape mismatch at byte 4: got " + std::to_string(L) + "x" +
        std::to_string(K) + ", expected " + std::to_string(expect_frames) + "x" +
        std::to_string(expect_bins));
  const std::size_t n = static_cast<std::size_t>(L) * K;
  need(b, 12, 8 * n, "response payload");
  ComplexSpectrogram eps(static_cast<int>(L), static_cast<int>(K), 1,
                         Domain::compressive);
  for (std::size_t i = 0; i < n; ++i)
    eps.data[i] = cdouble(get_f32(b, 12 + 4 * i), get_f32(b, 12 + 4 * (n + i)));
  return eps;
}

}  // namespace wire

namespace {

void write_all(int fd, const std::uint8_t* data, std::size_t count) {
  while (count > 0) {
    const ssize_t n = ::write(fd, data, count);
    if (n < 0) {
      if (errno == EINTR) continue;
      throw ExternalDenoiserError(std::string("write failed: ") + std::strerror(errno));
    }
    data += n;
    count -= static_cast<std::size_t>(n);
  }
}

/// Returns false on orderly EOF at a frame boundary.
bool read_all(int fd, std::uint8_t* data, std::size_t count, int timeout_ms,
              bool eof_ok) {
  std::size_t got = 0;
  while (got < count) {
    pollfd pfd{fd, POLLIN, 0};
    const int pr = ::poll(&pfd, 1, timeout_ms);
    if (pr == 0) throw ExternalDenoiserError("timed out waiting for peer");
    if (pr < 0) {
      if (errno == EINTR) continue;
      throw ExternalDenoiserError(std::string("poll failed: ") + std::strerror(errno));
    }
    const ssize_t n = ::read(fd, data + got, count - got);
    if (n < 0) {
      if (errno == EINTR) continue;
      throw ExternalDenoiserError(std::string("read failed: ") + std::strerror(errno));
    }
    if (n == 0) {
      if (got == 0 && eof_ok) return false;
      throw ExternalDenoiserError("peer closed mid-frame after " +
                                  std::to_string(got) + " bytes");
    }
    got += static_cast<std::size_t>(n);
  }
  return true;
}

}  // namespace

StreamTransport::StreamTransport(int read_fd, int write_fd, int child_pid)
    : read_fd_(read_fd), write_fd_(write_fd), child_pid_(child_pid) {
  ignore_sigpipe_once();
}

StreamTransport::StreamTransport(StreamTransport&& other) noexcept
    : read_fd_(std::exchange(other.read_fd_, -1)),
      write_fd_(std::exchange(other.write_fd_, -1)),
      child_pid_(std::exchange(other.child_pid_, -1)) {}

StreamTransport::~StreamTransport() {
  if (write_fd_ >= 0 && write_fd_ != read_fd_) ::close(write_fd_);
  if (read_fd_ >= 0) ::close(read_fd_);
  if (child_pid_ > 0) {
    int status = 0;
    for (int i = 0; i < 50; ++i) {
      if (::waitpid(child_pid_, &status, WNOHANG) != 0) return;
      ::usleep(20000);
    }
    ::kill(child_pid_, SIGKILL);
    ::waitpid(child_pid_, &status, 0);
  }
}

void StreamTransport::close_write() {
  if (write_fd_ >= 0 && write_fd_ != read_fd_) {
    ::close(write_fd_);
    write_fd_ = -1;
  }
}

StreamTransport StreamTransport::spawn(const std::string& command) {
  int to_child[2], from_child[2];
  if (::pipe(to_child) != 0 || ::pipe(from_child) != 0)
    throw ExternalDenoiserError("pipe() failed");
  const int pid = ::fork();
  if (pid < 0) throw ExternalDenoiserError("fork() failed");
  if (pid == 0) {
    ::dup2(to_child[0], STDIN_FILENO);
    ::dup2(from_child[1], STDOUT_FILENO);
    ::close(to_child[0]);
    ::close(to_child[1]);
    ::close(from_child[0]);
    ::close(from_child[1]);
    ::execl("/bin/sh", "sh", "-c", command.c_str(), static_cast<char*>(nullptr));
    _exit(127);
  }
  ::close(to_child[0]);
  ::close(from_child[1]);
  return StreamTransport(from_child[0], to_child[1], pid);
}

StreamTransport StreamTransport::connect_tcp(const std::string& host, int port) {
  addrinfo hints{};
  hints.ai_family = AF_UNSPEC;
  hints.ai_socktype = SOCK_STREAM;
  addrinfo* res = nullptr;
  const std::string port_str = std::to_string(port);
  if (::getaddrinfo(host.c_str(), port_str.c_str(), &hints, &res) != 0 || !res)
    throw ExternalDenoiserError("cannot resolve " + host + ":" + port_str);
  int fd = -1;
  for (addrinfo* p = res; p; p = p->ai_next) {
    fd = ::socket(p->ai_family, p->ai_socktype, p->ai_protocol);
    if (fd < 0) continue;
    if (::connect(fd, p->ai_addr, p->ai_addrlen) == 0) break;
    ::close(fd);
    fd = -1;
  }
  ::freeaddrinfo(res);
  if (fd < 0)
    throw ExternalDenoiserError("cannot connect to " + host + ":" + port_str);
  return StreamTransport(fd, fd);
}

void StreamTransport::write_frame(const std::vector<std::uint8_t>& payload) {
  std::uint8_t len[4];
  const std::uint32_t n = static_cast<std::uint32_t>(payload.size());
  len[0] = n & 0xFF;
  len[1] = (n >> 8) & 0xFF;
  len[2] = (n >> 16) & 0xFF;
  len[3] = (n >> 24) & 0xFF;
  write_all(write_fd_, len, 4);
  write_all(write_fd_, payload.data(), payload.size());
}

std::vector<std::uint8_t> StreamTransport::read_frame(int timeout_ms) {
  std::uint8_t len[4];
  if (!read_all(read_fd_, len, 4, timeout_ms, /*eof_ok=*/true)) return {};
  const std::uint32_t n = static_cast<std::uint32_t>(len[0]) |
                          (static_cast<std::uint32_t>(len[1]) << 8) |
                          (static_cast<std::uint32_t>(len[2]) << 16) |
                          (static_cast<std::uint32_t>(len[3]) << 24);
  if (n == 0) throw ExternalDenoiserError("zero-length frame");
  std::vector<std::uint8_t> payload(n);
  read_all(read_fd_, payload.data(), n, timeout_ms, /*eof_ok=*/false);
  return payload;
}

ExternalDenoiser::ExternalDenoiser(StreamTransport transport, int timeout_ms)
    : transport_(std::move(transport)), timeout_ms_(timeout_ms) {}

std::unique_ptr<ExternalDenoiser> ExternalDenoiser::from_endpoint(
    const std::string& endpoint, int timeout_ms) {
  const auto colon = endpoint.rfind(':');
  if (colon != std::string::npos && colon + 1 < endpoint.size()) {
    const std::string tail = endpoint.substr(colon + 1);
    if (tail.find_first_not_of("0123456789") == std::string::npos &&
        endpoint.find(' ') == std::string::npos) {
      return std::make_unique<ExternalDenoiser>(
          StreamTransport::connect_tcp(endpoint.substr(0, colon), std::stoi(tail)),
          timeout_ms);
    }
  }
  return std::make_unique<ExternalDenoiser>(StreamTransport::spawn(endpoint),
                                            timeout_ms);
}

ComplexSpectrogram ExternalDenoiser::predict_noise(const ComplexSpectrogram& x_t_p,
                                                   int t) {
  transport_.write_frame(wire::encode_request(x_t_p, t));
  const std::vector<std::uint8_t> payload = transport_.read_frame(timeout_ms_);
  if (payload.empty())
    throw ExternalDenoiserError("denoiser endpoint closed the stream");
  ComplexSpectrogram eps = wire::decode_response(payload, x_t_p.frames, x_t_p.bins);
  eps.copy_meta(x_t_p);
  return eps;
}

void serve_denoiser(DenoiserInterface& denoiser, int read_fd, int write_fd) {
  StreamTransport io(read_fd, write_fd);
  for (;;) {
    const std::vector<std::uint8_t> payload = io.read_frame(-1);
    if (payload.empty()) return;  // EOF
    const wire::Request req = wire::decode_request(payload);
    const ComplexSpectrogram eps = denoiser.predict_noise(req.x, req.t);
    io.write_frame(wire::encode_response(eps));
  }
}

}  // namespace dpsrefine
