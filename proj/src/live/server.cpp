#include "swarmsim/live.hpp"

#include "swarmsim/dynamics.hpp"

#include <boost/asio/ip/tcp.hpp>
#include <boost/asio/post.hpp>
#include <boost/asio/signal_set.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/http.hpp>
#include <boost/beast/websocket.hpp>

#include <fstream>
#include <iterator>
#include <set>
#include <sstream>

namespace swarmsim::live {

namespace beast = boost::beast;
namespace http = beast::http;
namespace websocket = beast::websocket;
namespace net = boost::asio;
using tcp = net::ip::tcp;
using nlohmann::json;
using Clock = std::chrono::steady_clock;

namespace {

struct Outgoing {
    std::shared_ptr<const std::string> text;
    int epoch = 0;
    std::int64_t tick = -1;  // frames only; -1 for messages that are never dropped
};

}  // namespace

class WsSession;

struct Server::Impl {
    net::io_context ioc{1};
    tcp::acceptor acceptor{ioc};
    std::optional<net::signal_set> signals;
    std::set<std::shared_ptr<WsSession>> sessions;  // io thread only
    Server* owner = nullptr;

    std::mutex stop_mu;
    std::condition_variable stop_cv;
    bool stop_requested = false;

    void accept();
    void broadcast(Outgoing msg);
    void broadcast_snapshot(std::shared_ptr<const std::string> text, int epoch, std::int64_t tick);
    void request_stop() {
        {
            std::lock_guard<std::mutex> lock(stop_mu);
            stop_requested = true;
        }
        stop_cv.notify_all();
    }
};

class WsSession : public std::enable_shared_from_this<WsSession> {
public:
    WsSession(tcp::socket&& socket, Server::Impl& hub, Server& server)
        : ws_(std::move(socket)), hub_(hub), server_(server) {}

    void run(http::request<http::string_body> req) {
        ws_.set_option(websocket::stream_base::timeout::suggested(beast::role_type::server));
        ws_.async_accept(req, beast::bind_front_handler(&WsSession::on_accept, shared_from_this()));
    }

    // The snapshot establishes the epoch and tick floor for later frames.
    void send_snapshot(std::shared_ptr<const std::string> text, int epoch, std::int64_t tick) {
        epoch_ = epoch;
        last_tick_ = tick;
        frame_.reset();
        queue_.push_back(std::move(text));
        write_next();
    }

    void send_message(std::shared_ptr<const std::string> text) {
        queue_.push_back(std::move(text));
        write_next();
    }

    void offer_frame(const Outgoing& f) {
        if (f.epoch != epoch_ || f.tick <= last_tick_) return;
        frame_ = f;  // older undelivered frames are overwritten
        write_next();
    }

    void close() {
        closed_ = true;
        beast::error_code ec;
        beast::get_lowest_layer(ws_).socket().close(ec);
    }

private:
    void on_accept(beast::error_code ec) {
        if (ec) return;
        joined_ = true;
        hub_.sessions.insert(shared_from_this());
        const auto [text, epoch, tick] = server_.inspect([](const Simulation& sim) {
            return std::make_tuple(
                std::make_shared<const std::string>(
                    snapshot_message(sim.world(), sim.paused(), sim.rate()).dump()),
                sim.epoch(), sim.world().tick());
        });
        send_snapshot(text, epoch, tick);
        read();
    }

    void read() {
        ws_.async_read(buffer_, beast::bind_front_handler(&WsSession::on_read, shared_from_this()));
    }

    void on_read(beast::error_code ec, std::size_t) {
        if (ec) {
            leave();
            return;
        }
        const std::string text = beast::buffers_to_string(buffer_.data());
        buffer_.consume(buffer_.size());
        handle(text);
        read();
    }

    void handle(const std::string& text) {
        const SwarmParams current =
            server_.inspect([](const Simulation& sim) { return sim.world().params(); });
        ControlMessage msg;
        try {
            msg = parse_control(text, current);
        } catch (const ProtocolError& e) {
            json id = nullptr;
            try {
                const auto j = json::parse(text);
                if (j.is_object() && j.contains("id")) id = j.at("id");
            } catch (...) {
            }
            send_message(std::make_shared<const std::string>(error_message(id, e.what()).dump()));
            return;
        }
        std::weak_ptr<WsSession> weak = shared_from_this();
        auto* ioc = &hub_.ioc;
        server_.submit(std::move(msg), [weak, ioc](const json& reply) {
            auto text = std::make_shared<const std::string>(reply.dump());
            net::post(*ioc, [weak, text] {
                if (auto self = weak.lock()) self->send_message(text);
            });
        });
    }

    void write_next() {
        if (writing_ || closed_) return;
        if (!queue_.empty()) {
            current_ = queue_.front();
            queue_.pop_front();
        } else if (frame_) {
            current_ = frame_->text;
            last_tick_ = frame_->tick;
            frame_.reset();
        } else {
            return;
        }
        writing_ = true;
        ws_.text(true);
        ws_.async_write(net::buffer(*current_),
                        beast::bind_front_handler(&WsSession::on_write, shared_from_this()));
    }

    void on_write(beast::error_code ec, std::size_t) {
        writing_ = false;
        current_.reset();
        if (ec) {
            leave();
            return;
        }
        write_next();
    }

    void leave() {
        closed_ = true;
        if (joined_) hub_.sessions.erase(shared_from_this());
        joined_ = false;
    }

    websocket::stream<beast::tcp_stream> ws_;
    Server::Impl& hub_;
    Server& server_;
    beast::flat_buffer buffer_;
    std::deque<std::shared_ptr<const std::string>> queue_;
    std::optional<Outgoing> frame_;
    std::shared_ptr<const std::string> current_;
    int epoch_ = 0;
    std::int64_t last_tick_ = -1;
    bool writing_ = false;
    bool joined_ = false;
    bool closed_ = false;
};

namespace {

class HttpSession : public std::enable_shared_from_this<HttpSession> {
public:
    HttpSession(tcp::socket&& socket, Server::Impl& hub, Server& server,
                std::filesystem::path ui_dir)
        : stream_(std::move(socket)), hub_(hub), server_(server), ui_dir_(std::move(ui_dir)) {}

    void run() { read(); }

private:
    void read() {
        req_ = {};
        stream_.expires_after(std::chrono::seconds(30));
        http::async_read(stream_, buffer_, req_,
                         beast::bind_front_handler(&HttpSession::on_read, shared_from_this()));
    }

    void on_read(beast::error_code ec, std::size_t) {
        if (ec) return;
        if (websocket::is_upgrade(req_)) {
            const std::string target(req_.target());
            if (target == "/ws" || target.rfind("/ws?", 0) == 0) {
                stream_.expires_never();
                std::make_shared<WsSession>(stream_.release_socket(), hub_, server_)
                    ->run(std::move(req_));
                return;
            }
        }
        respond();
    }

    void respond() {
        auto res = std::make_shared<http::response<http::string_body>>();
        res->version(req_.version());
        res->keep_alive(req_.keep_alive());
        res->set(http::field::server, "swarmsim");

        const std::string target(req_.target());
        if (req_.method() != http::verb::get && req_.method() != http::verb::head) {
            res->result(http::status::method_not_allowed);
            res->set(http::field::content_type, "text/plain");
            res->body() = "method not allowed\n";
        } else if (auto file = resolve_static(ui_dir_, target)) {
            std::ifstream in(*file, std::ios::binary);
            res->result(http::status::ok);
            res->set(http::field::content_type, mime_type(*file));
            res->body().assign(std::istreambuf_iterator<char>(in), {});
        } else if (target == "/" || target == "/index.html") {
            res->result(http::status::ok);
            res->set(http::field::content_type, "text/html; charset=utf-8");
            res->body() = fallback_page();
        } else {
            res->result(http::status::not_found);
            res->set(http::field::content_type, "text/plain");
            res->body() = "not found\n";
        }
        res->prepare_payload();
        if (req_.method() == http::verb::head) res->body().clear();

        http::async_write(stream_, *res,
                          [self = shared_from_this(), res](beast::error_code ec, std::size_t) {
                              if (ec || !res->keep_alive()) {
                                  beast::error_code ignored;
                                  self->stream_.socket().shutdown(tcp::socket::shutdown_send,
                                                                  ignored);
                                  return;
                              }
                              self->read();
                          });
    }

    beast::tcp_stream stream_;
    Server::Impl& hub_;
    Server& server_;
    std::filesystem::path ui_dir_;
    beast::flat_buffer buffer_;
    http::request<http::string_body> req_;
};

}  // namespace

void Server::Impl::accept() {
    acceptor.async_accept(ioc, [this](beast::error_code ec, tcp::socket socket) {
        if (!acceptor.is_open()) return;
        if (!ec)
            std::make_shared<HttpSession>(std::move(socket), *this, *owner, owner->opts_.ui_dir)
                ->run();
        accept();
    });
}

void Server::Impl::broadcast(Outgoing msg) {
    net::post(ioc, [this, msg = std::move(msg)] {
        for (const auto& s : sessions) {
            if (msg.tick < 0)
                s->send_message(msg.text);
            else
                s->offer_frame(msg);
        }
    });
}

void Server::Impl::broadcast_snapshot(std::shared_ptr<const std::string> text, int epoch,
                                      std::int64_t tick) {
    net::post(ioc, [this, text = std::move(text), epoch, tick] {
        for (const auto& s : sessions) s->send_snapshot(text, epoch, tick);
    });
}

Server::Server(ScenarioConfig cfg, Options opts)
    : cfg_(std::move(cfg)), opts_(std::move(opts)), impl_(std::make_unique<Impl>()) {
    impl_->owner = this;
    sim_ = std::make_unique<Simulation>(cfg_, opts_.sim);
}

Server::~Server() { stop(); }

void Server::start() {
    auto& a = impl_->acceptor;
    beast::error_code ec;
    const auto check = [&ec](const char* what) {
        if (ec) throw std::system_error(std::error_code(ec), what);
    };
    const auto address = net::ip::make_address(opts_.host, ec);
    check("address");
    const tcp::endpoint ep(address, opts_.port);
    a.open(ep.protocol(), ec);
    check("open");
    a.set_option(net::socket_base::reuse_address(true), ec);
    check("set_option");
    a.bind(ep, ec);
    check("bind");
    a.listen(net::socket_base::max_listen_connections, ec);
    check("listen");
    port_ = a.local_endpoint().port();

    impl_->signals.emplace(impl_->ioc, SIGINT, SIGTERM);
    impl_->signals->async_wait([this](beast::error_code ec, int) {
        if (!ec) impl_->request_stop();
    });

    impl_->accept();
    net_thread_ = std::thread([this] { impl_->ioc.run(); });
    sim_thread_ = std::thread([this] { sim_loop(); });
}

void Server::submit(ControlMessage msg, Simulation::Reply reply) {
    sim_->submit(std::move(msg), std::move(reply));
}

void Server::stop() {
    if (stopping_.exchange(true)) return;
    impl_->request_stop();
    sim_->notify();
    if (sim_thread_.joinable()) sim_thread_.join();
    net::post(impl_->ioc, [this] {
        beast::error_code ec;
        impl_->acceptor.close(ec);
        if (impl_->signals) impl_->signals->cancel(ec);
        for (const auto& s : impl_->sessions) s->close();
        impl_->sessions.clear();
    });
    if (net_thread_.joinable()) {
        // Let pending writes and closes run briefly, then stop the loop.
        std::this_thread::sleep_for(std::chrono::milliseconds(20));
        impl_->ioc.stop();
        net_thread_.join();
    }
}

void Server::wait() {
    std::unique_lock<std::mutex> lock(impl_->stop_mu);
    impl_->stop_cv.wait(lock, [&] { return impl_->stop_requested; });
}

void Server::sim_loop() {
    const auto frame_period = std::chrono::duration<double>(
        opts_.sim.frame_rate > 0.0 ? 1.0 / opts_.sim.frame_rate : 0.0);
    auto next_frame = Clock::now();
    auto anchor_time = Clock::now();
    std::int64_t anchor_tick = 0;
    double anchor_rate = 0.0;
    int anchor_epoch = -1;

    while (!stopping_) {
        bool idle = false;
        std::chrono::duration<double> wait_for{0.0};
        {
            std::lock_guard<std::mutex> lock(sim_mu_);
            const int epoch = sim_->epoch();
            sim_->drain();
            const World& w = sim_->world();
            if (sim_->epoch() != epoch) {
                impl_->broadcast_snapshot(
                    std::make_shared<const std::string>(
                        snapshot_message(w, sim_->paused(), sim_->rate()).dump()),
                    sim_->epoch(), w.tick());
            }
            if (sim_->paused() || sim_->finished()) {
                idle = true;
                anchor_epoch = -1;
            } else {
                if (anchor_epoch != sim_->epoch() || anchor_rate != sim_->rate()) {
                    anchor_epoch = sim_->epoch();
                    anchor_rate = sim_->rate();
                    anchor_tick = w.tick();
                    anchor_time = Clock::now();
                }
                const auto due = anchor_time + std::chrono::duration_cast<Clock::duration>(
                                                   std::chrono::duration<double>(
                                                       (w.tick() - anchor_tick) / anchor_rate));
                const auto now = Clock::now();
                if (due > now) wait_for = due - now;
            }
        }
        if (idle) {
            sim_->wait_for_work(std::chrono::milliseconds(50));
            continue;
        }
        if (wait_for >= std::chrono::milliseconds(1)) {
            sim_->wait_for_work(std::chrono::duration_cast<std::chrono::milliseconds>(wait_for));
            continue;
        }
        if (wait_for.count() > 0.0) std::this_thread::sleep_for(wait_for);

        std::lock_guard<std::mutex> lock(sim_mu_);
        std::optional<MetricsFrame> frame;
        try {
            frame = sim_->advance();
        } catch (const NumericBlowup& e) {
            impl_->broadcast({std::make_shared<const std::string>(
                                  error_message(nullptr, std::string("simulation aborted: ") +
                                                             e.what())
                                      .dump()),
                              sim_->epoch(), -1});
            sim_->submit({nullptr, Pause{}}, nullptr);
            continue;
        }
        const auto now = Clock::now();
        if (frame && (now >= next_frame || sim_->finished())) {
            impl_->broadcast({std::make_shared<const std::string>(
                                  frame_message(sim_->world(), *frame).dump()),
                              sim_->epoch(), sim_->world().tick()});
            next_frame = now + std::chrono::duration_cast<Clock::duration>(frame_period);
        }
    }
}

}  // namespace swarmsim::live
