use tokio::net::TcpListener;
use vrptw_service::{serve, Config};

#[tokio::main]
async fn main() {
    let config = match Config::from_env() {
        Ok(c) => c,
        Err(e) => {
            eprintln!("vrptw-server: {e}");
            std::process::exit(1);
        }
    };
    let listener = match TcpListener::bind(config.bind).await {
        Ok(l) => l,
        Err(e) => {
            eprintln!("vrptw-server: cannot bind {}: {e}", config.bind);
            std::process::exit(1);
        }
    };
    eprintln!("vrptw-server: listening on {}", config.bind);
    if let Err(e) = serve(listener, config).await {
        eprintln!("vrptw-server: {e}");
        std::process::exit(1);
    }
}
