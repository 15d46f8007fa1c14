//! Owner thread for one session: the only place its state is mutated.

use std::sync::atomic::{AtomicBool, AtomicUsize, Ordering};
use std::sync::Arc;
use std::thread;
use std::time::{Duration, Instant};

use tokio::sync::{mpsc, oneshot, watch};
use vibrocap_core::service::{
    AckMessage, ControlMessage, ErrorCode, HelloMessage, ProtocolError, Role, ServerMessage, Session,
    SessionId,
};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunnerOptions {
    /// End the session after this long without any connected client.
    pub idle_timeout: Duration,
    /// Most simulated wall time the loop tries to catch up on in one tick,
    /// before the clock factor is applied.
    pub max_lag: Duration,
}

impl Default for RunnerOptions {
    fn default() -> Self {
        Self {
            idle_timeout: Duration::from_secs(60),
            max_lag: Duration::from_millis(500),
        }
    }
}

enum Request {
    Control(ControlMessage, oneshot::Sender<Result<AckMessage, ProtocolError>>),
    Hello(Role, oneshot::Sender<HelloMessage>),
}

/// Shared handle to a running session.
#[derive(Debug)]
pub struct SessionHandle {
    id: SessionId,
    requests: mpsc::UnboundedSender<Request>,
    telemetry: watch::Receiver<Arc<str>>,
    controller: Arc<AtomicBool>,
    clients: Arc<AtomicUsize>,
    closed: Arc<AtomicBool>,
}

impl std::fmt::Debug for Request {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Request::Control(m, _) => f.debug_tuple("Control").field(m).finish(),
            Request::Hello(r, _) => f.debug_tuple("Hello").field(r).finish(),
        }
    }
}

/// Marks a connected client; releases its slot when dropped.
#[derive(Debug)]
pub struct ClientGuard {
    clients: Arc<AtomicUsize>,
    controller: Option<Arc<AtomicBool>>,
}

impl Drop for ClientGuard {
    fn drop(&mut self) {
        if let Some(c) = &self.controller {
            c.store(false, Ordering::SeqCst);
        }
        self.clients.fetch_sub(1, Ordering::SeqCst);
    }
}

impl SessionHandle {
    pub fn id(&self) -> &SessionId {
        &self.id
    }

    pub fn is_closed(&self) -> bool {
        self.closed.load(Ordering::SeqCst)
    }

    pub fn clients(&self) -> usize {
        self.clients.load(Ordering::SeqCst)
    }

    pub fn has_controller(&self) -> bool {
        self.controller.load(Ordering::SeqCst)
    }

    /// Register a client. Asking for [`Role::Controller`] succeeds only while
    /// the slot is free; otherwise the client joins as an observer.
    pub fn connect(&self, want: Role) -> (Role, ClientGuard) {
        self.clients.fetch_add(1, Ordering::SeqCst);
        let claimed = want == Role::Controller
            && self
                .controller
                .compare_exchange(false, true, Ordering::SeqCst, Ordering::SeqCst)
                .is_ok();
        let guard = ClientGuard {
            clients: self.clients.clone(),
            controller: claimed.then(|| self.controller.clone()),
        };
        (if claimed { Role::Controller } else { Role::Observer }, guard)
    }

    /// Latest serialized telemetry frame; latest-wins for slow readers.
    pub fn subscribe(&self) -> watch::Receiver<Arc<str>> {
        self.telemetry.clone()
    }

    pub async fn hello(&self, role: Role) -> Option<HelloMessage> {
        let (tx, rx) = oneshot::channel();
        self.requests.send(Request::Hello(role, tx)).ok()?;
        rx.await.ok()
    }

    pub async fn control(&self, msg: ControlMessage) -> Result<AckMessage, ProtocolError> {
        let id = msg.id();
        let closed = || ProtocolError::new(id, ErrorCode::SessionClosed, "session has ended");
        let (tx, rx) = oneshot::channel();
        self.requests
            .send(Request::Control(msg, tx))
            .map_err(|_| closed())?;
        rx.await.map_err(|_| closed())?
    }
}

/// Start the owner thread of `session` and return a handle to it.
pub fn spawn(session: Session, opts: RunnerOptions) -> Arc<SessionHandle> {
    let (req_tx, req_rx) = mpsc::unbounded_channel();
    let first: Arc<str> = ServerMessage::State(session.clone().snapshot()).to_json().into();
    let (tel_tx, tel_rx) = watch::channel(first);
    let handle = Arc::new(SessionHandle {
        id: session.id().clone(),
        requests: req_tx,
        telemetry: tel_rx,
        controller: Arc::new(AtomicBool::new(false)),
        clients: Arc::new(AtomicUsize::new(0)),
        closed: Arc::new(AtomicBool::new(false)),
    });
    let clients = handle.clients.clone();
    let closed = handle.closed.clone();
    let name = format!("session-{}", session.id());
    thread::Builder::new()
        .name(name)
        .spawn(move || {
            run(session, req_rx, tel_tx, &clients, opts);
            closed.store(true, Ordering::SeqCst);
        })
        .expect("spawn session thread");
    handle
}

fn run(
    mut session: Session,
    mut requests: mpsc::UnboundedReceiver<Request>,
    telemetry: watch::Sender<Arc<str>>,
    clients: &AtomicUsize,
    opts: RunnerOptions,
) {
    let settings = *session.settings();
    let period = Duration::from_secs_f64(1.0 / settings.telemetry_rate);
    let factor = settings.clock.factor();
    let dt = session.dt();
    let max_debt = opts.max_lag.as_secs_f64() * factor;
    let mut start = Instant::now();
    let mut ticks: u32 = 0;
    let mut last = start;
    let mut debt = 0.0;
    let mut idle_since: Option<Instant> = None;
    loop {
        loop {
            match requests.try_recv() {
                Ok(Request::Control(msg, reply)) => {
                    let _ = reply.send(session.apply(&msg));
                }
                Ok(Request::Hello(role, reply)) => {
                    let _ = reply.send(session.hello(role));
                }
                Err(mpsc::error::TryRecvError::Empty) => break,
                Err(mpsc::error::TryRecvError::Disconnected) => return,
            }
        }
        let now = Instant::now();
        if session.is_paused() {
            debt = 0.0;
        } else {
            debt = (debt + (now - last).as_secs_f64() * factor).min(max_debt);
            let n = (debt / dt).floor();
            debt -= n * dt;
            if let Err(e) = session.step_n(n as u64) {
                tracing::warn!(session = %session.id(), "simulation stopped: {e}");
                let msg = ProtocolError::new(None, ErrorCode::SessionClosed, format!("simulation stopped: {e}"));
                let _ = telemetry.send(msg.to_message().to_json().into());
                return;
            }
        }
        last = now;
        let _ = telemetry.send(ServerMessage::State(session.snapshot()).to_json().into());

        if clients.load(Ordering::SeqCst) == 0 {
            let since = *idle_since.get_or_insert(now);
            if now - since >= opts.idle_timeout {
                tracing::info!(session = %session.id(), "idle timeout");
                return;
            }
        } else {
            idle_since = None;
        }

        ticks += 1;
        let deadline = start + period * ticks;
        let now = Instant::now();
        if deadline > now {
            thread::sleep(deadline - now);
        } else if now - deadline > period {
            // fell behind by more than a frame: drop the backlog instead of bursting
            start = now;
            ticks = 0;
        }
    }
}
