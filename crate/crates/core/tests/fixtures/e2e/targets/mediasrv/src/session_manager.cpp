#include "session_manager.h"

// Tear down a session and forget about it.
void SessionManager::closeSession(int id)
{
  auto it = sessions_.find(id);
  if (it == sessions_.end()) {
    return;  // unknown id
  }
  Session *s = it->second;
  delete s;
  sessions_.erase(it);
  log_->info("closed session %d for %s", id, s->user().c_str());
}

void SessionStore::close(int id)
{
    auto it = sessions_.find(id);
    if (it == sessions_.end()) {
        return;
    }
    Session *s = it->second;
    log_->info("closed session %d for %s", id, s->user().c_str());
    sessions_.erase(it);
    delete s;
}
