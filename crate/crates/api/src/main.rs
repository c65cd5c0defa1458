use std::net::{IpAddr, Ipv4Addr, SocketAddr};

use clap::Parser;

#[derive(Debug, Parser)]
#[command(name = "bayescreen-api", version, about = "JSON-over-HTTP service for bayescreen")]
struct Args {
    /// Address to listen on. Loopback unless widened explicitly.
    #[arg(long, default_value_t = IpAddr::V4(Ipv4Addr::LOCALHOST))]
    bind: IpAddr,
    #[arg(long, default_value_t = 8787)]
    port: u16,
}

#[tokio::main]
async fn main() -> std::io::Result<()> {
    let args = Args::parse();
    let addr = SocketAddr::new(args.bind, args.port);
    let listener = tokio::net::TcpListener::bind(addr).await?;
    eprintln!("bayescreen-api {} listening on http://{}", bayescreen::VERSION, listener.local_addr()?);
    axum::serve(listener, bayescreen_api::router())
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
}
