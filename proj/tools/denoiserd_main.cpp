// Reference noise-predictor server for the external-denoiser wire protocol.
// Serves on stdin/stdout by default, or accepts TCP connections with
// --listen. Diagnostics go to stderr (stdout carries the protocol).

#include <CLI11.hpp>

#include <netinet/in.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cstdio>
#include <limits>
#include <memory>
#include <string>

#include "dpsrefine/denoiser_wire.hpp"
#include "dpsrefine/diffusion.hpp"
#include "dpsrefine/spectral.hpp"
#include "dpsrefine/wav.hpp"

using namespace dpsrefine;

int main(int argc, char** argv) {
  CLI::App app{"Noise-predictor server speaking the refinement wire protocol"};

  bool zero = false;
  std::string mu_wav;
  double s2 = 0.1;
  bool flat = false;
  int listen_port = 0;
  int fft_size = 512, hop_size = 128;
  app.add_flag("--zero", zero, "always answer eps_hat = 0");
  app.add_option("--mu", mu_wav, "mono wav whose compressive STFT is the prior mean");
  app.add_option("--s2", s2, "prior variance per (real, imag) component");
  app.add_flag("--flat", flat, "flat prior (infinite variance)");
  app.add_option("--listen", listen_port, "serve a TCP port instead of stdio");
  app.add_option("--fft-size", fft_size);
  app.add_option("--hop-size", hop_size);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    std::unique_ptr<DenoiserInterface> den;
    if (zero) {
      den = std::make_unique<ZeroDenoiser>();
    } else {
      if (mu_wav.empty())
        throw InvalidConfig("need --zero or --mu <wav> (optionally --flat)");
      const AudioFile f = read_wav(mu_wav);
      if (f.n_channels() != 1) throw InvalidInput(mu_wav + ": expected mono");
      StftParams p;
      p.fft_size = fft_size;
      p.hop_size = hop_size;
      ComplexSpectrogram mu = compress(stft(f.channels[0], p));
      const auto sched = make_schedule(1000, 1e-4, 0.02);
      den = std::make_unique<GaussianAnalyticDenoiser>(
          std::move(mu), flat ? std::numeric_limits<double>::infinity() : s2,
          sched);
    }

    if (listen_port == 0) {
      serve_denoiser(*den, STDIN_FILENO, STDOUT_FILENO);
      return 0;
    }

    const int sock = ::socket(AF_INET, SOCK_STREAM, 0);
    if (sock < 0) throw std::runtime_error("socket() failed");
    const int one = 1;
    ::setsockopt(sock, SOL_SOCKET, SO_REUSEADDR, &one, sizeof one);
    sockaddr_in addr{};
    addr.sin_family = AF_INET;
    addr.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
    addr.sin_port = htons(static_cast<std::uint16_t>(listen_port));
    if (::bind(sock, reinterpret_cast<sockaddr*>(&addr), sizeof addr) != 0)
      throw std::runtime_error("bind() failed on port " + std::to_string(listen_port));
    if (::listen(sock, 1) != 0) throw std::runtime_error("listen() failed");
    std::fprintf(stderr, "denoiserd: listening on 127.0.0.1:%d\n", listen_port);
    for (;;) {
      const int conn = ::accept(sock, nullptr, nullptr);
      if (conn < 0) continue;
      try {
        serve_denoiser(*den, conn, conn);
      } catch (const std::exception& e) {
        std::fprintf(stderr, "denoiserd: connection error: %s\n", e.what());
      }
    }
  } catch (const std::exception& e) {
    std::fprintf(stderr, "denoiserd: %s\n", e.what());
    return 1;
  }
}
