#include "swarmctl/server.hpp"

#include "swarmctl/mission.hpp"

#include <boost/asio.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/websocket.hpp>

#include <atomic>
#include <chrono>
#include <deque>
#include <mutex>
#include <thread>

namespace swarmctl {

namespace net = boost::asio;
namespace beast = boost::beast;
namespace websocket = beast::websocket;
using tcp = net::ip::tcp;
using protocol::Kind;

namespace {

class Session;

struct Hub {
  std::mutex mu;
  std::shared_ptr<Session> active;
  std::atomic<int> generation{0};
};

class Session : public std::enable_shared_from_this<Session> {
 public:
  Session(tcp::socket socket, Hub& hub, IngressQueue& queue, std::atomic<Tick>& now)
      : ws_(std::move(socket)), hub_(hub), queue_(queue), now_(now) {}

  void start() {
    ws_.set_option(websocket::stream_base::timeout::suggested(beast::role_type::server));
    ws_.async_accept([self = shared_from_this()](beast::error_code ec) { self->on_accept(ec); });
  }

  /// Must run on the io thread.
  void send(protocol::Frame f) {
    if (closed_) return;
    f.seq = ++seq_;
    out_.push_back(protocol::to_json(f).dump());
    if (!writing_) write_next();
  }

  void refuse_later() { refused_ = true; }

 private:
  void on_accept(beast::error_code ec) {
    if (ec) return;
    if (refused_) {
      send(error_frame(now_, "another operator session is active", std::nullopt));
      closing_after_write_ = true;
      return;
    }
    read_next();
  }

  void read_next() {
    ws_.async_read(buf_, [self = shared_from_this()](beast::error_code ec, std::size_t) { self->on_read(ec); });
  }

  void on_read(beast::error_code ec) {
    if (ec) {
      closed_ = true;
      std::lock_guard lock(hub_.mu);
      if (hub_.active.get() == this) hub_.active.reset();
      return;
    }
    const std::string text = beast::buffers_to_string(buf_.data());
    buf_.consume(buf_.size());
    handle(text);
    read_next();
  }

  void handle(const std::string& text) {
    protocol::Frame f;
    try {
      f = protocol::parse_frame(text);
    } catch (const protocol::ProtocolError& e) {
      std::optional<std::string> corr;
      // salvage the correlation id of a well-formed object with a bad payload
      auto j = json::parse(text, nullptr, false);
      if (j.is_object() && j.contains("correlation") && j["correlation"].is_string())
        corr = j["correlation"].get<std::string>();
      send(error_frame(now_, e.what(), corr));
      return;
    }
    switch (f.kind) {
      case Kind::Utterance:
      case Kind::CompletionResponse:
      case Kind::Command:
      case Kind::ModeChange:
      case Kind::Snapshot:
        break;
      default:
        send(error_frame(now_, "frames of kind " + std::string(protocol::to_string(f.kind)) +
                                   " are not accepted from clients",
                         f.correlation));
        return;
    }
    Inbound in;
    in.kind = f.kind;
    in.payload = f.payload;
    in.correlation = f.correlation ? f.correlation : std::optional<std::string>(std::to_string(f.seq));
    in.source = "client";
    if (auto dropped = queue_.push(std::move(in))) {
      send(error_frame(now_, "ingress queue full; frame dropped", dropped->correlation));
    }
  }

  void write_next() {
    if (out_.empty()) {
      writing_ = false;
      if (closing_after_write_) {
        closed_ = true;
        ws_.async_close(websocket::close_code::policy_error, [self = shared_from_this()](beast::error_code) {});
      }
      return;
    }
    writing_ = true;
    ws_.text(true);
    ws_.async_write(net::buffer(out_.front()), [self = shared_from_this()](beast::error_code ec, std::size_t) {
      if (ec) {
        self->closed_ = true;
        self->out_.clear();
        self->writing_ = false;
        return;
      }
      self->out_.pop_front();
      self->write_next();
    });
  }

  websocket::stream<beast::tcp_stream> ws_;
  Hub& hub_;
  IngressQueue& queue_;
  std::atomic<Tick>& now_;
  beast::flat_buffer buf_;
  std::deque<std::string> out_;
  std::int64_t seq_ = 0;
  bool writing_ = false;
  bool closed_ = false;
  bool refused_ = false;
  bool closing_after_write_ = false;
};

}  // namespace

struct Server::Impl {
  Impl(Scenario s, std::uint64_t seed, ServeOptions o)
      : options(o),
        mission(std::move(s), seed,
                [&] {
                  Mission::Options mo;
                  mo.keep_log = false;
                  mo.log_stream = o.log_stream;
                  mo.planned_ticks = o.max_ticks;
                  return mo;
                }()),
        acceptor(ioc),
        encoder(static_cast<int>(mission.scenario().keyframe_every)) {
    const tcp::endpoint ep(net::ip::make_address(options.address), options.port);
    acceptor.open(ep.protocol());
    acceptor.set_option(net::socket_base::reuse_address(true));
    acceptor.bind(ep);
    acceptor.listen();
  }

  void accept() {
    acceptor.async_accept([this](beast::error_code ec, tcp::socket sock) {
      if (ec) return;
      auto s = std::make_shared<Session>(std::move(sock), hub, mission.ingress(), now);
      {
        std::lock_guard lock(hub.mu);
        if (hub.active) {
          s->refuse_later();
        } else {
          hub.active = s;
          ++hub.generation;
        }
      }
      s->start();
      accept();
    });
  }

  void deliver(std::vector<protocol::Frame> frames) {
    std::shared_ptr<Session> s;
    {
      std::lock_guard lock(hub.mu);
      s = hub.active;
    }
    if (!s || frames.empty()) return;
    net::post(ioc, [s, frames = std::move(frames)]() mutable {
      for (auto& f : frames) s->send(std::move(f));
    });
  }

  ServeOptions options;
  Mission mission;
  net::io_context ioc;
  tcp::acceptor acceptor;
  Hub hub;
  std::atomic<Tick> now{0};
  std::atomic<bool> stopping{false};
  protocol::SnapshotEncoder encoder;
};

Server::Server(Scenario scenario, std::uint64_t seed, ServeOptions options)
    : impl_(std::make_unique<Impl>(std::move(scenario), seed, options)) {}

Server::~Server() { stop(); }

unsigned short Server::port() const { return impl_->acceptor.local_endpoint().port(); }

void Server::stop() {
  impl_->stopping = true;
  impl_->ioc.stop();
}

void Server::run() {
  Impl& m = *impl_;
  m.accept();
  auto guard = net::make_work_guard(m.ioc);
  std::thread io([&] { m.ioc.run(); });

  using clock = std::chrono::steady_clock;
  const auto period = m.options.speed > 0
                          ? std::chrono::duration_cast<clock::duration>(std::chrono::duration<double>(1.0 / m.options.speed))
                          : clock::duration::zero();
  auto next = clock::now();
  int seen_generation = m.hub.generation;
  const Tick cadence = m.mission.scenario().snapshot_every;

  while (!m.stopping) {
    if (m.options.max_ticks && m.mission.now() >= *m.options.max_ticks) break;
    next += period;
    std::this_thread::sleep_until(next);
    if (m.stopping) break;

    const int gen = m.hub.generation;
    const bool fresh = gen != seen_generation;
    if (fresh) {
      seen_generation = gen;
      m.encoder.force_keyframe();
    }
    m.mission.tick();
    m.now = m.mission.now();

    std::vector<protocol::Frame> frames;
    for (auto& o : m.mission.take_outbound()) {
      protocol::Frame f;
      f.tick = o.tick;
      f.kind = o.kind;
      f.payload = std::move(o.payload);
      f.correlation = std::move(o.correlation);
      frames.push_back(std::move(f));
    }
    const bool keyframe = m.mission.take_keyframe_request();
    if (keyframe) m.encoder.force_keyframe();
    if (fresh || keyframe || m.mission.now() % cadence == 0) {
      protocol::Frame snap;
      snap.tick = m.mission.now();
      snap.kind = Kind::Snapshot;
      snap.payload = m.encoder.encode(m.mission.world(), m.mission.snapshot_context());
      frames.push_back(std::move(snap));
    }
    m.deliver(std::move(frames));
  }

  guard.reset();
  // let queued writes drain briefly before tearing the loop down
  std::this_thread::sleep_for(std::chrono::milliseconds(50));
  m.ioc.stop();
  io.join();
}

}  // namespace swarmctl
