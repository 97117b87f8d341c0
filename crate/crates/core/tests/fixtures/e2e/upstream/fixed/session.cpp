#include "session_manager.h"

void SessionManager::closeSession(int id)
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
