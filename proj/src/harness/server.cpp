#include "harness/server.hpp"

#include <arpa/inet.h>
#include <fcntl.h>
#include <netinet/in.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cerrno>
#include <chrono>
#include <cstring>
#include <deque>
#include <vector>

#include "common/error.hpp"
#include "harness/protocol.hpp"
#include "harness/session.hpp"

namespace wtt::harness {

namespace {

using Clock = std::chrono::steady_clock;

constexpr std::size_t kMaxLine = 1 << 20;

void set_nonblocking(int fd) { ::fcntl(fd, F_SETFL, ::fcntl(fd, F_GETFL, 0) | O_NONBLOCK); }

struct Client {
  int fd = -1;
  std::string inbuf;
  std::string current;  // message being written
  std::size_t offset = 0;
  std::string next;     // newest frame not yet started; older ones are dropped
  bool closing = false; // close once the outbox drains
  bool dead = false;

  bool pending() const { return offset < current.size() || !next.empty(); }
};

}  // namespace

struct Server::Impl {
  ScenarioConfig cfg;
  ServerOptions opt;
  Session session;
  int listen_fd = -1;
  int wake[2] = {-1, -1};
  int bound_port = 0;
  std::atomic<bool> stopping{false};
  std::atomic<std::int64_t> published{0};
  std::vector<Client> clients;
  std::deque<Command> queue;
  std::size_t events_sent = 0;

  Impl(const ScenarioConfig& c, const ServerOptions& o) : cfg(c), opt(o), session(c) {
    listen_fd = ::socket(AF_INET, SOCK_STREAM, 0);
    if (listen_fd < 0) throw Error(ErrorKind::Io, "socket: " + std::string(std::strerror(errno)));
    const int one = 1;
    ::setsockopt(listen_fd, SOL_SOCKET, SO_REUSEADDR, &one, sizeof one);
    sockaddr_in addr{};
    addr.sin_family = AF_INET;
    addr.sin_port = htons(static_cast<std::uint16_t>(opt.port));
    if (::inet_pton(AF_INET, opt.host.c_str(), &addr.sin_addr) != 1) {
      ::close(listen_fd);
      throw Error(ErrorKind::InvalidArgument, "bad listen address '" + opt.host + "'");
    }
    if (::bind(listen_fd, reinterpret_cast<sockaddr*>(&addr), sizeof addr) < 0 || ::listen(listen_fd, 16) < 0) {
      const std::string msg = std::strerror(errno);
      ::close(listen_fd);
      throw Error(ErrorKind::Io, "cannot listen on " + opt.host + ":" + std::to_string(opt.port) + ": " + msg);
    }
    socklen_t len = sizeof addr;
    ::getsockname(listen_fd, reinterpret_cast<sockaddr*>(&addr), &len);
    bound_port = ntohs(addr.sin_port);
    set_nonblocking(listen_fd);
    if (::pipe(wake) < 0) {
      ::close(listen_fd);
      throw Error(ErrorKind::Io, "pipe: " + std::string(std::strerror(errno)));
    }
    set_nonblocking(wake[0]);
    set_nonblocking(wake[1]);
  }

  ~Impl() {
    for (auto& c : clients) ::close(c.fd);
    if (listen_fd >= 0) ::close(listen_fd);
    if (wake[0] >= 0) ::close(wake[0]);
    if (wake[1] >= 0) ::close(wake[1]);
  }

  void accept_all() {
    for (;;) {
      const int fd = ::accept(listen_fd, nullptr, nullptr);
      if (fd < 0) return;
      set_nonblocking(fd);
      Client c;
      c.fd = fd;
      clients.push_back(std::move(c));
    }
  }

  void fail(Client& c, const std::string& msg) {
    c.next = error_message(msg).dump() + "\n";
    c.closing = true;
    c.inbuf.clear();
  }

  void read_from(Client& c) {
    char buf[65536];
    for (;;) {
      const ssize_t n = ::recv(c.fd, buf, sizeof buf, 0);
      if (n == 0) {
        c.dead = true;
        return;
      }
      if (n < 0) {
        if (errno != EAGAIN && errno != EWOULDBLOCK && errno != EINTR) c.dead = true;
        return;
      }
      if (c.closing) continue;
      c.inbuf.append(buf, static_cast<std::size_t>(n));
      std::size_t nl;
      while (!c.closing && (nl = c.inbuf.find('\n')) != std::string::npos) {
        std::string line = c.inbuf.substr(0, nl);
        c.inbuf.erase(0, nl + 1);
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        try {
          queue.push_back(parse_command(line));
        } catch (const Error& e) {
          fail(c, e.what());
        }
      }
      if (!c.closing && c.inbuf.size() > kMaxLine) fail(c, "message exceeds " + std::to_string(kMaxLine) + " bytes");
    }
  }

  void write_to(Client& c) {
    for (;;) {
      if (c.offset >= c.current.size()) {
        if (c.next.empty()) break;
        c.current = std::move(c.next);
        c.next.clear();
        c.offset = 0;
      }
      const ssize_t n = ::send(c.fd, c.current.data() + c.offset, c.current.size() - c.offset, MSG_NOSIGNAL);
      if (n < 0) {
        if (errno != EAGAIN && errno != EWOULDBLOCK && errno != EINTR) c.dead = true;
        return;
      }
      c.offset += static_cast<std::size_t>(n);
    }
    if (c.closing) c.dead = true;
  }

  void apply_commands() {
    while (!queue.empty()) {
      Command cmd = std::move(queue.front());
      queue.pop_front();
      try {
        if (auto* l = std::get_if<LayoutCommand>(&cmd)) session.set_layout(std::move(l->blocks));
        else if (auto* m = std::get_if<ModeCommand>(&cmd)) session.set_mode(m->mode, m->seed);
      } catch (const std::exception& e) {
        session.events().push(session.step_count(), "warning", std::string("command rejected: ") + e.what());
      }
    }
  }

  void publish() {
    const auto& ev = session.events().events();
    std::vector<Event> fresh(ev.begin() + static_cast<std::ptrdiff_t>(std::min(events_sent, ev.size())), ev.end());
    events_sent = ev.size();
    const std::string line = frame_message(session, fresh).dump() + "\n";
    for (auto& c : clients)
      if (!c.closing) c.next = line;
    ++published;
  }

  void drop_dead() {
    std::erase_if(clients, [](const Client& c) {
      if (c.dead) ::close(c.fd);
      return c.dead;
    });
  }

  void run() {
    const double fps = opt.fps > 0.0 ? opt.fps : cfg.serve.fps;
    const auto period = std::chrono::duration_cast<Clock::duration>(std::chrono::duration<double>(1.0 / fps));
    auto next_tick = Clock::now();
    std::vector<pollfd> fds;
    while (!stopping.load()) {
      const auto now = Clock::now();
      int timeout = 0;
      if (next_tick > now)
        timeout = static_cast<int>(std::chrono::ceil<std::chrono::milliseconds>(next_tick - now).count());

      fds.clear();
      fds.push_back({listen_fd, POLLIN, 0});
      fds.push_back({wake[0], POLLIN, 0});
      for (const auto& c : clients)
        fds.push_back({c.fd, static_cast<short>(POLLIN | (c.pending() ? POLLOUT : 0)), 0});
      if (::poll(fds.data(), fds.size(), timeout) < 0 && errno != EINTR)
        throw Error(ErrorKind::Io, "poll: " + std::string(std::strerror(errno)));

      if (fds[1].revents & POLLIN) {
        char b[64];
        while (::read(wake[0], b, sizeof b) > 0) {
        }
      }
      for (std::size_t k = 0; k < clients.size(); ++k) {
        const short re = fds[k + 2].revents;
        if (re & (POLLIN | POLLHUP | POLLERR)) read_from(clients[k]);
        if (!clients[k].dead && (re & POLLOUT)) write_to(clients[k]);
      }
      if (fds[0].revents & POLLIN) accept_all();

      if (Clock::now() >= next_tick) {
        apply_commands();
        session.step();
        if (session.step_count() % cfg.serve.snapshot_every == 0) publish();
        for (auto& c : clients)
          if (!c.dead) write_to(c);
        next_tick += period;
        // Falling behind skips ticks instead of bursting to catch up.
        if (next_tick < Clock::now()) next_tick = Clock::now() + period;
        if (opt.max_frames > 0 && published.load() >= opt.max_frames) break;
      }
      drop_dead();
    }
    drain();
  }

  // Best effort delivery of what is queued, bounded in time.
  void drain() {
    const auto deadline = Clock::now() + std::chrono::seconds(2);
    for (;;) {
      drop_dead();
      std::vector<pollfd> fds;
      for (const auto& c : clients)
        if (c.pending()) fds.push_back({c.fd, POLLOUT, 0});
      if (fds.empty() || Clock::now() >= deadline) break;
      ::poll(fds.data(), fds.size(), 50);
      for (auto& c : clients)
        if (c.pending()) write_to(c);
    }
  }
};

Server::Server(const ScenarioConfig& cfg, const ServerOptions& opt) : impl_(std::make_unique<Impl>(cfg, opt)) {}
Server::~Server() = default;

int Server::port() const { return impl_->bound_port; }
void Server::run() { impl_->run(); }

void Server::stop() {
  impl_->stopping.store(true);
  const char b = 1;
  [[maybe_unused]] const ssize_t n = ::write(impl_->wake[1], &b, 1);
}

std::int64_t Server::frames_published() const { return impl_->published.load(); }

}  // namespace wtt::harness
