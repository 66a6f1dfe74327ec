#![allow(dead_code)]

use std::io::{Read, Write};
use std::net::{SocketAddr, TcpListener, TcpStream};
use std::path::Path;
use std::process::{Child, Command, Output, Stdio};
use std::time::{Duration, Instant};

use drillguide::engine::TrajectorySample;
use drillguide::events::{RemovalEvent, RemovalLog};
use drillguide_service::{OutFrame, PoseFrame};
use futures_util::{SinkExt, StreamExt};
use tokio_tungstenite::tungstenite::Message;

pub const BIN: &str = env!("CARGO_BIN_EXE_drillguide");

pub fn drillguide<I, S>(args: I) -> Output
where
    I: IntoIterator<Item = S>,
    S: AsRef<std::ffi::OsStr>,
{
    Command::new(BIN).args(args).output().expect("spawn drillguide")
}

pub fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

/// Blocking HTTP/1.1 request; returns status and body.
pub fn http(addr: SocketAddr, method: &str, path: &str, body: &str) -> std::io::Result<(u16, Vec<u8>)> {
    let mut s = TcpStream::connect(addr)?;
    write!(
        s,
        "{method} {path} HTTP/1.1\r\nHost: {addr}\r\nConnection: close\r\nContent-Type: application/json\r\nContent-Length: {}\r\n\r\n{body}",
        body.len()
    )?;
    let mut raw = Vec::new();
    s.read_to_end(&mut raw)?;
    let split = raw
        .windows(4)
        .position(|w| w == b"\r\n\r\n")
        .ok_or_else(|| std::io::Error::other("no header terminator"))?;
    let head = String::from_utf8_lossy(&raw[..split]);
    let status = head[9..12].parse().map_err(std::io::Error::other)?;
    Ok((status, raw[split + 4..].to_vec()))
}

pub fn free_port() -> u16 {
    TcpListener::bind("127.0.0.1:0").unwrap().local_addr().unwrap().port()
}

/// `drillguide serve` running as a child process; killed on drop.
pub struct Server {
    pub child: Child,
    pub addr: SocketAddr,
}

impl Server {
    pub fn start(cases_dir: &Path, log_dir: &Path) -> Server {
        let port = free_port();
        let child = Command::new(BIN)
            .args(["serve", "--cases-dir"])
            .arg(cases_dir)
            .arg("--log-dir")
            .arg(log_dir)
            .args(["--port", &port.to_string()])
            .stdout(Stdio::null())
            .stderr(Stdio::null())
            .spawn()
            .unwrap();
        let addr: SocketAddr = format!("127.0.0.1:{port}").parse().unwrap();
        let deadline = Instant::now() + Duration::from_secs(20);
        while http(addr, "GET", "/cases", "").is_err() {
            assert!(Instant::now() < deadline, "server did not come up");
            std::thread::sleep(Duration::from_millis(50));
        }
        Server { child, addr }
    }
}

impl Drop for Server {
    fn drop(&mut self) {
        let _ = self.child.kill();
        let _ = self.child.wait();
    }
}

/// Streams a trajectory through `/sessions/{id}/stream`, one frame per
/// sample, and rebuilds the removal log from the replies.
pub async fn stream_trajectory(addr: SocketAddr, id: &str, traj: &[TrajectorySample]) -> RemovalLog {
    let url = format!("ws://{addr}/sessions/{id}/stream");
    let (mut ws, _) = tokio_tungstenite::connect_async(url).await.unwrap();
    let mut log = RemovalLog::default();
    for s in traj {
        let f = PoseFrame { t: s.t_ms, pos_mm: s.pos_mm, on: s.on };
        ws.send(Message::text(serde_json::to_string(&f).unwrap())).await.unwrap();
        let reply = ws.next().await.unwrap().unwrap();
        match serde_json::from_str::<OutFrame>(reply.to_text().unwrap()).unwrap() {
            OutFrame::Tick(f) => log.extend(f.removed.iter().map(|r| RemovalEvent {
                t_ms: f.t,
                voxel: r.voxel(),
                zone: r.zone().expect("guided session sends zones"),
            })),
            OutFrame::Error(e) => panic!("{e:?}"),
        }
    }
    ws.close(None).await.unwrap();
    log
}
