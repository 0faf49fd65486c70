#include <arpa/inet.h>
#include <fcntl.h>
#include <netinet/in.h>
#include <poll.h>
#include <sys/socket.h>
#include <sys/time.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>
#include <fstream>
#include <sstream>
#include <utility>

#include <openssl/pem.h>

#include "ossl.hpp"
#include "pkiaudit/certs.hpp"

namespace pkiaudit::certs {

FixtureChainSource::FixtureChainSource(std::filesystem::path dir, Timestamp fetched_at)
    : dir_(std::move(dir)), fetched_at_(fetched_at) {}

CertificateChain FixtureChainSource::fetch(const std::string& name, const std::string&, int port) const {
  auto path = dir_ / (name + ".pem");
  std::ifstream in(path);
  if (!in) throw TransportError("connection refused: " + name + ":" + std::to_string(port));
  std::stringstream buffer;
  buffer << in.rdbuf();
  auto text = buffer.str();

  // Blocks are decoded one at a time so an unparseable intermediate is
  // retained rather than failing the whole capture.
  std::vector<Bytes> blobs;
  ossl::BioPtr bio(BIO_new_mem_buf(text.data(), static_cast<int>(text.size())));
  for (;;) {
    char* block = nullptr;
    char* header = nullptr;
    unsigned char* data = nullptr;
    long len = 0;
    if (!PEM_read_bio(bio.get(), &block, &header, &data, &len)) {
      ERR_clear_error();
      break;
    }
    blobs.emplace_back(data, data + len);
    OPENSSL_free(block);
    OPENSSL_free(header);
    OPENSSL_free(data);
  }
  if (blobs.empty()) throw TransportError("no certificates in fixture bundle " + path.string());
  try {
    return chain_from_der(blobs, name, fetched_at_);
  } catch (const CertificateParseError& e) {
    throw TransportError(std::string("unparseable leaf: ") + e.what());
  }
}

// ---------------------------------------------------------------------------

TlsChainSource::TlsChainSource(std::shared_ptr<RateLimiter> limiter, RetryPolicy retry,
                               std::chrono::milliseconds timeout)
    : limiter_(std::move(limiter)), retry_(std::move(retry)), timeout_(timeout) {}

std::mutex& TlsChainSource::host_lock(const std::string& host) const {
  std::lock_guard guard(locks_mutex_);
  auto& slot = host_locks_[host];
  if (!slot) slot = std::make_unique<std::mutex>();
  return *slot;
}

namespace {

class Socket {
 public:
  explicit Socket(int fd) : fd_(fd) {}
  Socket(const Socket&) = delete;
  Socket& operator=(const Socket&) = delete;
  Socket(Socket&& other) noexcept : fd_(std::exchange(other.fd_, -1)) {}
  ~Socket() {
    if (fd_ >= 0) ::close(fd_);
  }
  int fd() const { return fd_; }

 private:
  int fd_;
};

Socket connect_tcp(const std::string& ip, int port, std::chrono::milliseconds timeout) {
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_port = htons(static_cast<std::uint16_t>(port));
  if (::inet_pton(AF_INET, ip.c_str(), &addr.sin_addr) != 1)
    throw TransportError("not an IPv4 address: " + ip);

  Socket sock(::socket(AF_INET, SOCK_STREAM, 0));
  if (sock.fd() < 0) throw TransportError(std::string("socket: ") + std::strerror(errno));
  int flags = ::fcntl(sock.fd(), F_GETFL, 0);
  ::fcntl(sock.fd(), F_SETFL, flags | O_NONBLOCK);
  int rc = ::connect(sock.fd(), reinterpret_cast<sockaddr*>(&addr), sizeof addr);
  if (rc != 0 && errno != EINPROGRESS)
    throw TransportError(std::string("connect: ") + std::strerror(errno));
  if (rc != 0) {
    pollfd p{sock.fd(), POLLOUT, 0};
    if (::poll(&p, 1, static_cast<int>(timeout.count())) != 1)
      throw TransportError("connect timeout to " + ip);
    int err = 0;
    socklen_t len = sizeof err;
    ::getsockopt(sock.fd(), SOL_SOCKET, SO_ERROR, &err, &len);
    if (err != 0) throw TransportError(std::string("connect: ") + std::strerror(err));
  }
  ::fcntl(sock.fd(), F_SETFL, flags);
  timeval tv{static_cast<time_t>(timeout.count() / 1000),
             static_cast<suseconds_t>((timeout.count() % 1000) * 1000)};
  ::setsockopt(sock.fd(), SOL_SOCKET, SO_RCVTIMEO, &tv, sizeof tv);
  ::setsockopt(sock.fd(), SOL_SOCKET, SO_SNDTIMEO, &tv, sizeof tv);
  return sock;
}

std::vector<Bytes> handshake(const std::string& name, const std::string& ip, int port,
                             std::chrono::milliseconds timeout) {
  ossl::SslCtxPtr ctx(SSL_CTX_new(TLS_client_method()));
  if (!ctx) throw TransportError("SSL_CTX_new: " + ossl::last_error());
  SSL_CTX_set_verify(ctx.get(), SSL_VERIFY_NONE, nullptr);
  SSL_CTX_set_security_level(ctx.get(), 0);
  SSL_CTX_set_cipher_list(ctx.get(), "ALL:@SECLEVEL=0");
  SSL_CTX_set_min_proto_version(ctx.get(), 0);

  Socket sock = connect_tcp(ip, port, timeout);
  ossl::SslPtr ssl(SSL_new(ctx.get()));
  SSL_set_tlsext_host_name(ssl.get(), name.c_str());
  SSL_set_fd(ssl.get(), sock.fd());
  if (SSL_connect(ssl.get()) != 1)
    throw TransportError("TLS handshake with " + name + " failed: " + ossl::last_error());

  std::vector<Bytes> blobs;
  if (STACK_OF(X509)* presented = SSL_get_peer_cert_chain(ssl.get())) {
    for (int i = 0; i < sk_X509_num(presented); ++i) {
      unsigned char* der = nullptr;
      int len = i2d_X509(sk_X509_value(presented, i), &der);
      if (len > 0) blobs.emplace_back(der, der + len);
      OPENSSL_free(der);
    }
  }
  SSL_shutdown(ssl.get());
  ERR_clear_error();
  if (blobs.empty()) throw TransportError("server " + name + " presented no certificate");
  return blobs;
}

}  // namespace

CertificateChain TlsChainSource::fetch(const std::string& name, const std::string& ip, int port) const {
  std::lock_guard serial(host_lock(name));
  std::string last_error;
  for (int attempt = 0; attempt < retry_.attempts(); ++attempt) {
    if (attempt > 0) retry_.wait_before_retry(attempt - 1);
    if (limiter_) limiter_->acquire();
    std::vector<Bytes> blobs;
    try {
      blobs = handshake(name, ip, port, timeout_);
    } catch (const TransportError& e) {
      last_error = e.what();
      continue;
    }
    auto now = std::chrono::time_point_cast<std::chrono::seconds>(std::chrono::system_clock::now());
    try {
      return chain_from_der(blobs, name, now);
    } catch (const CertificateParseError& e) {
      throw TransportError(std::string("unparseable leaf: ") + e.what());
    }
  }
  throw TransportError(last_error);
}

}  // namespace pkiaudit::certs
